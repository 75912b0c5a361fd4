#pragma once

// Configuration file handling: strict schema validation (unknown keys are
// rejected with a field path), defaults for optional entries, and a
// semantically lossless dump for round-tripping.

#include <string>

#include "sso/system_model.hpp"

namespace sso {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parses and validates a configuration document. Throws ConfigError with
/// the offending field path on schema violations; physical invariants of the
/// referenced modules are re-checked via CaseDefinition::validate().
CaseDefinition parse_case(const std::string& json_text);
CaseDefinition load_case(const std::string& path);

/// Serializes a definition back to the same schema (2-space indent, stable
/// key order). parse_case(dump_case(d)) is semantically identical to d.
std::string dump_case(const CaseDefinition& def);

/// FNV-1a hash of the canonical dump, for artifact provenance headers.
std::string config_hash(const CaseDefinition& def);

}  // namespace sso
