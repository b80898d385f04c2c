#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "skg/review/service.hpp"
#include "skg/rules/ast.hpp"

namespace skg::review {

struct Principal {
  std::string reviewer_id;
  std::set<ReviewStage> roles;
};

/// Static bearer tokens, from {"tokens": [{"token", "reviewer_id", "roles"}]}.
class TokenTable {
 public:
  static TokenTable parse(std::string_view json_text);
  static TokenTable load(const std::string& path);
  void add(std::string token, Principal p);
  const Principal* find(std::string_view token) const;

 private:
  std::map<std::string, Principal, std::less<>> tokens_;
};

/// HTTP status for an error code.
int http_status(Errc code) noexcept;

struct ServerOptions {
  /// Rule sets the violations endpoint can name; "default" is the service's.
  std::map<std::string, rules::ConstraintSet> rulesets;
  /// Static UI bundle served under /ui/ when set.
  std::optional<std::string> ui_dir;
  std::size_t threads = 8;
};

/// The v1 review API over a ReviewService.
class ReviewServer {
 public:
  ReviewServer(ReviewService& service, TokenTable tokens, ServerOptions opts = {});
  ~ReviewServer();

  /// Binds; port 0 picks a free port. Returns the bound port. Throws Io.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind.
  void run();
  /// Blocks until run() accepts connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace skg::review
