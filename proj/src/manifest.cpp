#include "repstab/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>

#include "repstab/errors.hpp"
#include "repstab/textio.hpp"

namespace repstab {

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for hashing: " + path);

    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("sha256: EVP context allocation failed");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256: digest init failed");
    }
    char buf[1 << 16];
    while (in.good()) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got)) != 1) {
            EVP_MD_CTX_free(ctx);
            throw Error("sha256: digest update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256: digest final failed");
    }
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

void RunManifest::add_input(const std::string& path) {
    inputs.push_back({path, sha256_file(path)});
}

void RunManifest::add_output(const std::string& path) {
    outputs.push_back({path, sha256_file(path)});
}

nlohmann::json RunManifest::to_json() const {
    auto digests = [](const std::vector<FileDigest>& files) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& f : files) arr.push_back({{"path", f.path}, {"sha256", f.sha256}});
        return arr;
    };
    return {{"command", command}, {"argv", argv},       {"inputs", digests(inputs)},
            {"outputs", digests(outputs)}, {"config", config}, {"seed", seed},
            {"tool_version", tool_version}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    for (const auto& f : j.at("inputs"))
        m.inputs.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
    for (const auto& f : j.at("outputs"))
        m.outputs.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    return m;
}

void RunManifest::save(const std::string& path) const {
    write_text_file(path, to_json().dump(2) + "\n");
}

RunManifest RunManifest::load(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad manifest JSON: " + e.what());
    }
    try {
        return from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": manifest fields missing or mistyped: " + e.what());
    }
}

void RunManifest::verify_inputs() const {
    for (const auto& f : inputs) {
        const std::string now = sha256_file(f.path);
        if (now != f.sha256)
            throw ValidationError("manifest input digest mismatch for " + f.path);
    }
}

} // namespace repstab
