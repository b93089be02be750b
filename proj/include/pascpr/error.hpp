#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace pascpr {

enum class Errc {
  empty_sphere,
  infeasible,
  invalid_sequence,
  domain,
  length_mismatch,
  configuration,
  propagation,
  degenerate,
  io,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::empty_sphere: return "empty sphere";
    case Errc::infeasible: return "infeasible";
    case Errc::invalid_sequence: return "invalid sequence";
    case Errc::domain: return "domain error";
    case Errc::length_mismatch: return "length mismatch";
    case Errc::configuration: return "configuration error";
    case Errc::propagation: return "propagation error";
    case Errc::degenerate: return "degenerate input";
    case Errc::io: return "i/o error";
  }
  return "error";
}

inline void make_directories(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace pascpr
