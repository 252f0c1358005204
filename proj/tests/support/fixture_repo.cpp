#include "fixture_repo.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vtrace/git_process.hpp"

namespace fs = std::filesystem;

namespace vtrace::fixtures {

namespace {

constexpr long long kBaseTime = 1600000000;

std::string data_block(const std::string& s) { return "data " + std::to_string(s.size()) + "\n" + s + "\n"; }

void git_or_throw(const std::string& dir, const std::vector<std::string>& args, const std::string& input = {}) {
  auto r = run_git(dir, args, input);
  if (r.exit_code != 0) {
    std::string cmd;
    for (const auto& a : args) cmd += " " + a;
    throw std::runtime_error("git" + cmd + " failed: " + r.err);
  }
}

}  // namespace

std::string lines(std::initializer_list<std::string_view> l) {
  std::string out;
  for (auto s : l) {
    out += s;
    out += '\n';
  }
  return out;
}

FixtureRepo::FixtureRepo(const std::string& name) {
  static std::atomic<int> counter{0};
  dir_ = (fs::temp_directory_path() /
          ("vtrace-fx-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++)))
             .string();
  fs::remove_all(dir_);
  fs::create_directories(dir_);
  git_or_throw(dir_, {"init", "-q"});
}

FixtureRepo::~FixtureRepo() {
  if (std::getenv("VTRACE_KEEP_FIXTURES")) return;
  std::error_code ec;
  fs::remove_all(dir_, ec);
}

int FixtureRepo::commit(const std::string& message, const std::vector<FileOp>& ops, const std::string& branch,
                        std::optional<int> parent, std::optional<int> merge_parent) {
  const int mark = static_cast<int>(tips_of_.size()) + 1;
  const long long when = kBaseTime + 3600LL * (next_time_++);
  std::ostringstream s;
  s << "commit refs/heads/" << branch << "\n";
  s << "mark :" << mark << "\n";
  s << "author Fixture Author <author@example.org> " << when << " +0000\n";
  s << "committer Fixture Author <author@example.org> " << when << " +0000\n";
  s << data_block(message);
  std::optional<int> from = parent;
  if (!from) {
    auto it = tips_.find(branch);
    if (it != tips_.end()) from = it->second;
  }
  if (from) s << "from :" << *from << "\n";
  if (merge_parent) s << "merge :" << *merge_parent << "\n";
  for (const auto& op : ops) {
    switch (op.kind) {
      case FileOp::Kind::Write:
        s << "M 100644 inline " << op.path << "\n" << data_block(op.content);
        break;
      case FileOp::Kind::Remove:
        s << "D " << op.path << "\n";
        break;
      case FileOp::Kind::Rename:
        s << "R " << op.content << " " << op.path << "\n";
        break;
    }
  }
  s << "\n";
  stream_ += s.str();
  tips_[branch] = mark;
  tips_of_.push_back(branch);
  return mark;
}

void FixtureRepo::tag(const std::string& name, int handle) {
  stream_ += "reset refs/tags/" + name + "\nfrom :" + std::to_string(handle) + "\n\n";
}

void FixtureRepo::annotated_tag(const std::string& name, int handle, const std::string& message) {
  const long long when = kBaseTime + 3600LL * (next_time_++);
  stream_ += "tag " + name + "\nfrom :" + std::to_string(handle) +
             "\ntagger Fixture Author <author@example.org> " + std::to_string(when) + " +0000\n" +
             data_block(message);
}

void FixtureRepo::build(const std::string& head_branch) {
  const std::string marks = dir_ + "/.git/fixture-marks";
  git_or_throw(dir_, {"fast-import", "--quiet", "--export-marks=" + marks}, stream_ + "done\n");
  ids_.assign(tips_of_.size(), std::string());
  std::ifstream in(marks);
  std::string mark, sha;
  while (in >> mark >> sha) {
    int m = std::stoi(mark.substr(1));
    if (m >= 1 && m <= static_cast<int>(ids_.size())) ids_[static_cast<std::size_t>(m - 1)] = sha;
  }
  git_or_throw(dir_, {"symbolic-ref", "HEAD", "refs/heads/" + head_branch});
  git_or_throw(dir_, {"reset", "-q", "--hard"});
}

const std::string& FixtureRepo::id(int handle) const {
  if (handle < 1 || handle > static_cast<int>(ids_.size()) || ids_[static_cast<std::size_t>(handle - 1)].empty())
    throw std::out_of_range("unknown fixture commit " + std::to_string(handle));
  return ids_[static_cast<std::size_t>(handle - 1)];
}

}  // namespace vtrace::fixtures
