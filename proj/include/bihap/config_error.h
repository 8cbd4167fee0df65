#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bihap {

/// Validation failure listing every offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::vector<std::string> fields, const std::string& what)
      : std::invalid_argument(what), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

/// Collects field names, then throws one ConfigError naming all of them.
class FieldChecker {
 public:
  explicit FieldChecker(std::string context) : context_(std::move(context)) {}

  void Check(bool ok, const std::string& field) {
    if (!ok) { bad_.push_back(field); }
  }

  /// Runs a nested Validate(), recording @p field if it throws.
  template <typename Fn>
  void Nested(const std::string& field, Fn&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      for (const auto& f : e.fields()) { bad_.push_back(field + "." + f); }
    } catch (const std::invalid_argument&) {
      bad_.push_back(field);
    }
  }

  void ThrowIfAny() const {
    if (bad_.empty()) { return; }
    std::string joined;
    for (const auto& f : bad_) { joined += (joined.empty() ? "" : ", ") + f; }
    throw ConfigError(bad_, "invalid " + context_ + ": " + joined);
  }

 private:
  std::string context_;
  std::vector<std::string> bad_;
};

}  // namespace bihap
