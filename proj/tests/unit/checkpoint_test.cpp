#include <gtest/gtest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "nmsp/checkpoint.hpp"
#include "nmsp/errors.hpp"
#include "nmsp/trainer.hpp"

namespace nmsp {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nmsp_checkpoint_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ModelConfig small_config(std::size_t width = 16) {
  ModelConfig c;
  c.vocab_size = 20;
  c.max_length = 12;
  c.width = width;
  c.heads = 2;
  c.ffn_width = 24;
  c.semantic_depth = 1;
  c.fusion_depth = 1;
  c.modality_width = 4;
  c.phoneme_count = 6;
  c.component_count = 9;
  return c;
}

TEST(Checkpoint, RoundTripIsExact) {
  const fs::path dir = scratch_dir("roundtrip");
  SpellerModel m(small_config(), 3);
  save_checkpoint(dir / "m.ckpt", m, "seed = 3\n");
  std::string run;
  SpellerModel back = load_checkpoint(dir / "m.ckpt", &run);
  EXPECT_EQ(run, "seed = 3\n");
  EXPECT_EQ(back.config(), m.config());
  EXPECT_EQ(serialize_parameters(back), serialize_parameters(m));
  EXPECT_EQ(read_checkpoint_header(dir / "m.ckpt").config, m.config());
  EXPECT_FALSE(fs::exists(dir / "m.ckpt.tmp"));

  std::ifstream in(dir / "m.ckpt", std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "NMSP");
}

TEST(Checkpoint, CorruptFilesRejected) {
  const fs::path dir = scratch_dir("corrupt");
  SpellerModel m(small_config(), 3);
  save_checkpoint(dir / "m.ckpt", m, "");
  const auto size = fs::file_size(dir / "m.ckpt");
  fs::resize_file(dir / "m.ckpt", size - 9);
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt"), InputError);
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << "XXXX";
  EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), InputError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(Checkpoint, FailedWriteKeepsPreviousFile) {
  const fs::path dir = scratch_dir("failed");
  SpellerModel first(small_config(), 1);
  save_checkpoint(dir / "m.ckpt", first, "first");
  fs::create_directories(dir / "m.ckpt.tmp");  // the temporary cannot be opened as a file
  SpellerModel second(small_config(), 2);
  EXPECT_THROW(save_checkpoint(dir / "m.ckpt", second, "second"), IoError);
  std::string run;
  const SpellerModel back = load_checkpoint(dir / "m.ckpt", &run);
  EXPECT_EQ(run, "first");
}

TEST(Checkpoint, KillDuringWriteLeavesNoPartialFile) {
  const fs::path dir = scratch_dir("kill");
  const fs::path path = dir / "m.ckpt";
  SpellerModel m(small_config(64), 5);
  for (int attempt = 0; attempt < 5; ++attempt) {
    fs::remove(path);
    const pid_t pid = fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
      for (;;) save_checkpoint(path, m, "run");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20 + 15 * attempt));
    kill(pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    ASSERT_TRUE(WIFSIGNALED(status));
    if (fs::exists(path)) {
      SpellerModel back = load_checkpoint(path);
      EXPECT_EQ(serialize_parameters(back), serialize_parameters(m));
    }
  }
}

}  // namespace
}  // namespace nmsp
