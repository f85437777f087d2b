#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cas/types.hpp"

namespace cas {

inline constexpr const char* kToolkitVersion = "0.1.0";

uint64_t fnv1a64(std::span<const unsigned char> bytes);
uint64_t fnv1a64_str(const std::string& s);
std::string checksum_hex(uint64_t h);

// checksum of a file's bytes; throws Error when unreadable
uint64_t file_checksum(const std::string& path);

// order-sensitive checksum over session ids and observation flags; used to
// verify per-fold refitting inputs
uint64_t sessions_checksum(std::span<const Session> sessions);

// Record of one CLI invocation. Written next to each artifact as
// <artifact>.manifest.json; artifacts stay deterministic and reference it.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> flags;  // resolved values
    std::map<std::string, std::string> input_checksums;
    std::string version = kToolkitVersion;
    std::vector<uint64_t> seeds;
    std::string timestamp;  // ISO 8601 UTC

    static std::string now_iso8601();
};

void save_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace cas
