#pragma once

#include "guicheck/reasoner.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace guicheck::agent {

struct HashedEdit {
  std::string path;
  std::string before_hash;
  std::string after_content;

  friend bool operator==(const HashedEdit&, const HashedEdit&) = default;
};

/// A candidate program's source tree. Edits are hash-gated and applied
/// all-or-nothing; one workspace belongs to one debug loop.
class Workspace {
public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Regular files, workspace-relative with '/' separators, sorted. Hidden entries are skipped.
  std::vector<std::string> files() const;
  std::string read(const std::string& rel) const;
  std::string hash(const std::string& rel) const;
  bool contains(const std::string& rel) const;

  /// Throws ReasonerError for paths that are absolute, escape the root or do
  /// not exist, and StaleWorkspace when a file changed since its hash was taken.
  void apply(const std::vector<HashedEdit>& edits);

private:
  std::filesystem::path resolve(const std::string& rel) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

}  // namespace guicheck::agent
