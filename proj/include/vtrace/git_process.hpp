#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace vtrace {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs `git -C <dir> <args...>` to completion. `input` is written to the
// child's stdin. Extra `env` entries are NAME=VALUE strings.
ProcessResult run_git(const std::string& dir, const std::vector<std::string>& args, const std::string& input = {},
                      const std::vector<std::string>& env = {});

// A long-running `git cat-file --batch` child. Requests are serialized.
class CatFileBatch {
 public:
  explicit CatFileBatch(std::string dir);
  ~CatFileBatch();
  CatFileBatch(const CatFileBatch&) = delete;
  CatFileBatch& operator=(const CatFileBatch&) = delete;

  struct Object {
    std::string id;
    std::string type;
    std::string content;
  };

  // `spec` is anything cat-file accepts: an object id, `rev:path`, ...
  // Returns nullopt when the object does not exist.
  std::optional<Object> read(const std::string& spec);

 private:
  void start();
  void stop();
  bool read_exact(std::string& out, std::size_t n);
  bool read_line(std::string& out);

  std::string dir_;
  std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace vtrace
