#include "manifest.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "gcnwp/error.hpp"

namespace gcnwp::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");

    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);

    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json in = nlohmann::json::array();
    for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : outputs) out.push_back(p.string());
    return {{"command", command},
            {"argv", argv},
            {"config_path", config_path},
            {"plan_path", plan_path},
            {"inputs", in},
            {"seed", seed},
            {"outputs", out},
            {"tool_version", kToolVersion}};
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out << contents;
        if (!out.flush()) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    write_atomically(dir / "run_manifest.json", manifest.to_json().dump(2) + "\n");
}

}  // namespace gcnwp::cli
