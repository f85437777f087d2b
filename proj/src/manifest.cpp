#include "cas/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace cas {

uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t fnv1a64_str(const std::string& s) {
    return fnv1a64(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

std::string checksum_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file: " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

uint64_t sessions_checksum(std::span<const Session> sessions) {
    std::string acc;
    for (const Session& s : sessions) {
        acc += s.session_id;
        acc += '|';
        for (const SerpItem& it : s.items) {
            acc += it.clicked ? 'c' : '.';
            acc += it.mouse_fixated ? 'f' : '.';
        }
        acc += s.labeled() ? (*s.satisfaction ? "S" : "s") : "-";
        acc += '\n';
    }
    return fnv1a64_str(acc);
}

std::string RunManifest::now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void save_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["flags"] = m.flags;
    j["input_checksums"] = m.input_checksums;
    j["version"] = m.version;
    j["seeds"] = m.seeds;
    j["timestamp"] = m.timestamp;
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace cas
