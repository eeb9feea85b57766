#include "guicheck/workspace.hpp"

#include "guicheck/error.hpp"
#include "guicheck/image_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace guicheck::agent {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
}

}  // namespace

Workspace::Workspace(fs::path root) : root_(std::move(root)) {
  if (!fs::is_directory(root_)) fail(ErrorCode::IoError, "workspace is not a directory: " + root_.string());
}

std::vector<std::string> Workspace::files() const {
  std::vector<std::string> out;
  for (auto it = fs::recursive_directory_iterator(root_); it != fs::recursive_directory_iterator(); ++it) {
    if (it->path().filename().string().starts_with(".")) {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) out.push_back(fs::relative(it->path(), root_).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path Workspace::resolve(const std::string& rel) const {
  const fs::path p(rel);
  if (rel.empty() || p.is_absolute()) fail(ErrorCode::ReasonerError, "edit path must be workspace-relative: '" + rel + "'");
  for (const auto& part : p) {
    if (part == "..") fail(ErrorCode::ReasonerError, "edit path escapes the workspace: '" + rel + "'");
  }
  return root_ / p;
}

bool Workspace::contains(const std::string& rel) const {
  try {
    return fs::is_regular_file(resolve(rel));
  } catch (const Error&) {
    return false;
  }
}

std::string Workspace::read(const std::string& rel) const {
  std::lock_guard lock(mu_);
  return slurp(resolve(rel));
}

std::string Workspace::hash(const std::string& rel) const {
  std::lock_guard lock(mu_);
  return fnv1a_hex(slurp(resolve(rel)));
}

void Workspace::apply(const std::vector<HashedEdit>& edits) {
  std::lock_guard lock(mu_);
  std::vector<fs::path> targets;
  std::vector<std::string> originals;
  for (const auto& e : edits) {
    const fs::path target = resolve(e.path);
    if (!fs::is_regular_file(target)) fail(ErrorCode::ReasonerError, "edit of unknown file '" + e.path + "'");
    std::string current = slurp(target);
    if (fnv1a_hex(current) != e.before_hash) {
      fail(ErrorCode::StaleWorkspace, "'" + e.path + "' changed since it was read");
    }
    targets.push_back(target);
    originals.push_back(std::move(current));
  }

  // Stage every file first so a write failure leaves the tree untouched.
  std::vector<fs::path> staged;
  try {
    for (std::size_t i = 0; i < edits.size(); ++i) {
      fs::path tmp = targets[i];
      tmp += ".guicheck-staged";
      spill(tmp, edits[i].after_content);
      staged.push_back(tmp);
    }
  } catch (...) {
    for (const auto& s : staged) fs::remove(s);
    throw;
  }
  std::size_t done = 0;
  try {
    for (; done < edits.size(); ++done) fs::rename(staged[done], targets[done]);
  } catch (...) {
    for (std::size_t i = 0; i < done; ++i) spill(targets[i], originals[i]);
    for (std::size_t i = done; i < staged.size(); ++i) fs::remove(staged[i]);
    throw;
  }
}

}  // namespace guicheck::agent
