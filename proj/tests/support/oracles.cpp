#include "oracles.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nmsp::testing {

std::vector<GoldenMaskRow> read_golden_masks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<GoldenMaskRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    GoldenMaskRow r;
    std::string masked;
    std::getline(fields, r.mode, '\t');
    fields >> r.characters >> r.row;
    fields.ignore(1);
    std::getline(fields, masked);
    std::istringstream ids(masked);
    for (std::size_t j; ids >> j;) r.masked.push_back(j);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace nmsp::testing
