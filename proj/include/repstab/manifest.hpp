#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace repstab {

inline constexpr const char* kToolVersion = "repstab 0.1.0";

std::string sha256_file(const std::string& path);

struct FileDigest {
    std::string path;
    std::string sha256;
};

// Written next to every CLI output; replaying the recorded argv
// reproduces the outputs bit-exactly.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;

    void add_input(const std::string& path);
    void add_output(const std::string& path);

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);

    void save(const std::string& path) const;
    static RunManifest load(const std::string& path);

    // Recomputes input digests; throws ValidationError on any mismatch.
    void verify_inputs() const;
};

} // namespace repstab
