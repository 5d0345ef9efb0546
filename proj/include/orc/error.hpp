#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace orc {

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable tag; `what()` carries the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, const std::string& reason)
      : Error("syntax-error", "line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

// uci-store
class StoreIoError : public Error {
 public:
  explicit StoreIoError(const std::string& m) : Error("store-io", m) {}
};
class AmbiguousPath : public Error {
 public:
  explicit AmbiguousPath(const std::string& m) : Error("ambiguous-path", m) {}
};
class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& m) : Error("conflict", m) {}
};
class NotFound : public Error {
 public:
  explicit NotFound(const std::string& m) : Error("not-found", m) {}
};
class LockTimeout : public Error {
 public:
  explicit LockTimeout(const std::string& m) : Error("lock-timeout", m) {}
};
class UnsupportedValue : public Error {
 public:
  explicit UnsupportedValue(const std::string& m) : Error("unsupported-value", m) {}
};

// yang-jin
class UnsupportedStatement : public Error {
 public:
  UnsupportedStatement(const std::string& statement, std::size_t line)
      : Error("unsupported-statement",
              "line " + std::to_string(line) + ": unsupported statement '" + statement + "'"),
        statement_(statement),
        line_(line) {}

  const std::string& statement() const noexcept { return statement_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string statement_;
  std::size_t line_;
};
class AnnotationError : public Error {
 public:
  explicit AnnotationError(const std::string& m) : Error("annotation-error", m) {}
};
class JinFormatError : public Error {
 public:
  JinFormatError(const std::string& path, const std::string& reason)
      : Error("jin-format", path + ": " + reason), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};
class UnknownType : public Error {
 public:
  explicit UnknownType(const std::string& name) : Error("unknown-type", "unknown type '" + name + "'") {}
};

// datamap
class UnknownModule : public Error {
 public:
  explicit UnknownModule(const std::string& name) : Error("unknown-module", "unknown module '" + name + "'") {}
};
class UnknownNode : public Error {
 public:
  explicit UnknownNode(const std::string& segment)
      : Error("unknown-node", "unknown node '" + segment + "'") {}
};
class UnknownListEntry : public Error {
 public:
  explicit UnknownListEntry(const std::string& key)
      : Error("unknown-list-entry", "no list entry with key '" + key + "'") {}
};
class MissingKey : public Error {
 public:
  explicit MissingKey(const std::string& list)
      : Error("missing-key", "list '" + list + "' addressed without a key") {}
};
class RootMismatch : public Error {
 public:
  explicit RootMismatch(const std::string& m) : Error("root-mismatch", m) {}
};
class ShapeError : public Error {
 public:
  ShapeError(std::string code, const std::string& m) : Error(std::move(code), m) {}
};

}  // namespace orc
