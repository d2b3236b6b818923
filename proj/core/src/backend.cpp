#include "stainpipe/backend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "stainpipe/error.hpp"
#include "stainpipe/raster.hpp"

namespace stainpipe {

namespace fs = std::filesystem;

const char* backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::identity: return "identity";
    case BackendKind::affine_color: return "affine_color";
    case BackendKind::external_command: return "external_command";
    case BackendKind::precomputed_dir: return "precomputed_dir";
  }
  return "identity";
}

BackendSpec BackendSpec::make_identity() { return BackendSpec{}; }

BackendSpec BackendSpec::make_affine(const std::array<double, 9>& m,
                                     const std::array<double, 3>& b) {
  BackendSpec spec;
  spec.kind = BackendKind::affine_color;
  spec.matrix = m;
  spec.offset = b;
  spec.validate();
  return spec;
}

BackendSpec BackendSpec::make_external(std::vector<std::string> argv) {
  BackendSpec spec;
  spec.kind = BackendKind::external_command;
  spec.command = std::move(argv);
  spec.validate();
  return spec;
}

BackendSpec BackendSpec::make_precomputed(std::string dir) {
  BackendSpec spec;
  spec.kind = BackendKind::precomputed_dir;
  spec.directory = std::move(dir);
  spec.validate();
  return spec;
}

void BackendSpec::validate() const {
  switch (kind) {
    case BackendKind::identity:
      break;
    case BackendKind::affine_color:
      for (double v : matrix) {
        if (!std::isfinite(v)) {
          raise(errc::invalid_config, "affine_color matrix has non-finite entry");
        }
      }
      for (double v : offset) {
        if (!std::isfinite(v)) {
          raise(errc::invalid_config, "affine_color offset has non-finite entry");
        }
      }
      break;
    case BackendKind::external_command: {
      if (command.empty()) {
        raise(errc::invalid_config, "external_command needs a command");
      }
      bool has_in = false, has_out = false;
      for (const auto& arg : command) {
        if (arg.find("{in_dir}") != std::string::npos) has_in = true;
        if (arg.find("{out_dir}") != std::string::npos) has_out = true;
      }
      if (!has_in || !has_out) {
        raise(errc::invalid_config,
              "external_command template must mention {in_dir} and {out_dir}");
      }
      break;
    }
    case BackendKind::precomputed_dir:
      if (directory.empty()) {
        raise(errc::invalid_config, "precomputed_dir needs a directory");
      }
      break;
  }
}

std::string BackendSpec::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = backend_kind_name(kind);
  switch (kind) {
    case BackendKind::identity:
      break;
    case BackendKind::affine_color: {
      for (int r = 0; r < 3; ++r) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int c = 0; c < 3; ++c) {
          row.push_back(matrix[static_cast<std::size_t>(r) * 3 + c]);
        }
        j["matrix"].push_back(row);
      }
      j["offset"] = offset;
      break;
    }
    case BackendKind::external_command:
      j["command"] = command;
      break;
    case BackendKind::precomputed_dir:
      j["directory"] = directory;
      break;
  }
  return j.dump(2);
}

BackendSpec BackendSpec::from_json(const std::string& text) {
  BackendSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") {
      spec.kind = BackendKind::identity;
    } else if (kind == "affine_color") {
      spec.kind = BackendKind::affine_color;
      const auto& m = j.at("matrix");
      if (m.size() != 3) raise(errc::invalid_config, "matrix must be 3x3");
      for (std::size_t r = 0; r < 3; ++r) {
        if (m[r].size() != 3) raise(errc::invalid_config, "matrix must be 3x3");
        for (std::size_t c = 0; c < 3; ++c) {
          spec.matrix[r * 3 + c] = m[r][c].get<double>();
        }
      }
      if (j.contains("offset")) {
        const auto& b = j.at("offset");
        if (b.size() != 3) raise(errc::invalid_config, "offset must have 3 entries");
        for (std::size_t c = 0; c < 3; ++c) spec.offset[c] = b[c].get<double>();
      }
    } else if (kind == "external_command") {
      spec.kind = BackendKind::external_command;
      spec.command = j.at("command").get<std::vector<std::string>>();
    } else if (kind == "precomputed_dir") {
      spec.kind = BackendKind::precomputed_dir;
      spec.directory = j.at("directory").get<std::string>();
    } else {
      raise(errc::invalid_config, "unknown backend kind: " + kind);
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, std::string("malformed backend json: ") + e.what());
  }
  spec.validate();
  return spec;
}

namespace {

std::vector<Patch> apply_affine(const std::vector<Patch>& patches,
                                const BackendSpec& spec) {
  std::vector<Patch> out = patches;
  for (Patch& patch : out) {
    for (std::size_t i = 0; i < patch.pixels.size(); i += 3) {
      const double in[3] = {static_cast<double>(patch.pixels[i]),
                            static_cast<double>(patch.pixels[i + 1]),
                            static_cast<double>(patch.pixels[i + 2])};
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = spec.matrix[c * 3 + 0] * in[0] +
                         spec.matrix[c * 3 + 1] * in[1] +
                         spec.matrix[c * 3 + 2] * in[2] + spec.offset[c];
        patch.pixels[i + c] = round_to_u8(v);
      }
    }
  }
  return out;
}

struct ExecResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stderr_tail;
};

// Shell-free subprocess with stderr capture and an optional wall-clock limit.
ExecResult run_command(const std::vector<std::string>& argv, double timeout_s) {
  int err_pipe[2];
  if (pipe(err_pipe) != 0) {
    raise(errc::backend_failure, "could not create stderr pipe");
  }
  const pid_t pid = fork();
  if (pid < 0) {
    close(err_pipe[0]);
    close(err_pipe[1]);
    raise(errc::backend_failure, "fork failed");
  }
  if (pid == 0) {
    close(err_pipe[0]);
    dup2(err_pipe[1], STDERR_FILENO);
    close(err_pipe[1]);
    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(err_pipe[1]);

  ExecResult res;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_s);
  constexpr std::size_t kTailCap = 64 * 1024;
  char buf[4096];
  bool open = true;
  while (open) {
    int wait_ms = -1;
    if (timeout_s > 0.0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      wait_ms = std::max<long long>(0, left.count());
    }
    struct pollfd pfd = {err_pipe[0], POLLIN, 0};
    const int pr = poll(&pfd, 1, wait_ms);
    if (pr > 0) {
      const ssize_t n = read(err_pipe[0], buf, sizeof(buf));
      if (n <= 0) {
        open = false;
      } else {
        res.stderr_tail.append(buf, static_cast<std::size_t>(n));
        if (res.stderr_tail.size() > kTailCap) {
          res.stderr_tail.erase(0, res.stderr_tail.size() - kTailCap);
        }
      }
    } else if (pr == 0) {
      res.timed_out = true;
      kill(pid, SIGKILL);
      open = false;
    } else if (errno != EINTR) {
      open = false;
    }
  }
  close(err_pipe[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.exit_code = 128 + WTERMSIG(status);
  }
  return res;
}

double backend_timeout_seconds() {
  const char* env = std::getenv(kBackendTimeoutEnv);
  if (env == nullptr || *env == '\0') return 0.0;
  char* end = nullptr;
  const double v = std::strtod(env, &end);
  if (end == env || v < 0.0 || !std::isfinite(v)) return 0.0;
  return v;
}

CoreImage patch_as_image(const Patch& patch, int patch_size) {
  CoreImage img;
  img.width = patch_size;
  img.height = patch_size;
  img.pixels = patch.pixels;
  return img;
}

// Reads patches back from a directory, preserving list order and metadata.
std::vector<Patch> read_patch_dir(const std::vector<Patch>& patches,
                                  const std::string& dir, const PatchGrid& grid,
                                  const std::string& core_id) {
  std::vector<Patch> out = patches;
  for (Patch& patch : out) {
    const fs::path file =
        fs::path(dir) / patch_filename(core_id, patch.row, patch.col);
    if (!fs::exists(file)) {
      raise(errc::incomplete_output,
            "backend produced no patch " + file.filename().string());
    }
    const CoreImage img = load_core_image(file.string());
    if (img.width != grid.patch_size || img.height != grid.patch_size) {
      raise(errc::contract_violation,
            "backend patch " + file.filename().string() + " is " +
                std::to_string(img.width) + "x" + std::to_string(img.height) +
                ", expected " + std::to_string(grid.patch_size) + " square");
    }
    patch.pixels = img.pixels;
  }
  return out;
}

std::vector<Patch> apply_external(const std::vector<Patch>& patches,
                                  const BackendSpec& spec, const PatchGrid& grid,
                                  const std::string& core_id,
                                  const std::string& work_dir) {
  fs::path base = work_dir.empty()
                      ? fs::temp_directory_path() / ("stainpipe_" + core_id)
                      : fs::path(work_dir);
  const fs::path in_dir = base / "in";
  const fs::path out_dir = base / "out";
  std::error_code ec;
  fs::remove_all(in_dir, ec);
  fs::remove_all(out_dir, ec);
  fs::create_directories(in_dir);
  fs::create_directories(out_dir);

  for (const Patch& patch : patches) {
    const CoreImage img = patch_as_image(patch, grid.patch_size);
    save_png(img, (in_dir / patch_filename(core_id, patch.row, patch.col)).string());
  }

  std::vector<std::string> argv = spec.command;
  for (auto& arg : argv) {
    for (std::size_t pos; (pos = arg.find("{in_dir}")) != std::string::npos;) {
      arg.replace(pos, 8, in_dir.string());
    }
    for (std::size_t pos; (pos = arg.find("{out_dir}")) != std::string::npos;) {
      arg.replace(pos, 9, out_dir.string());
    }
  }
  const ExecResult res = run_command(argv, backend_timeout_seconds());
  if (res.timed_out) {
    raise(errc::backend_failure,
          "backend command timed out (" + std::string(kBackendTimeoutEnv) + ")");
  }
  if (res.exit_code != 0) {
    std::string msg = "backend command exited with code " +
                      std::to_string(res.exit_code);
    if (!res.stderr_tail.empty()) msg += "; stderr: " + res.stderr_tail;
    raise(errc::backend_failure, msg);
  }
  return read_patch_dir(patches, out_dir.string(), grid, core_id);
}

}  // namespace

std::vector<Patch> transform_patches(const std::vector<Patch>& patches,
                                     const BackendSpec& backend,
                                     const PatchGrid& grid,
                                     const std::string& core_id,
                                     const std::string& work_dir) {
  backend.validate();
  for (const Patch& patch : patches) {
    if (patch.pixels.size() !=
        static_cast<std::size_t>(grid.patch_size) * grid.patch_size * 3) {
      raise(errc::grid_mismatch, "patch buffer does not match grid patch size");
    }
  }
  switch (backend.kind) {
    case BackendKind::identity:
      return patches;
    case BackendKind::affine_color:
      return apply_affine(patches, backend);
    case BackendKind::external_command:
      return apply_external(patches, backend, grid, core_id, work_dir);
    case BackendKind::precomputed_dir:
      return read_patch_dir(patches, backend.directory, grid, core_id);
  }
  return patches;
}

}  // namespace stainpipe
