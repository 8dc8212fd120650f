#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include "wdro/error.hpp"

namespace wdro::cli {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Io, "sha256 unavailable");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad()) throw Error(ErrorKind::Io, "read failed for " + path.string());
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::string hex;
    char two[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(two, sizeof two, "%02x", md[i]);
        hex += two;
    }
    return hex;
}

namespace {

json digests_json(const std::vector<FileDigest>& ds) {
    json arr = json::array();
    for (const auto& d : ds) arr.push_back({{"role", d.role}, {"path", d.path}, {"sha256", d.sha256}});
    return arr;
}

std::vector<FileDigest> digests_from(const json& arr) {
    std::vector<FileDigest> ds;
    for (const auto& d : arr)
        ds.push_back({d.at("role").get<std::string>(), d.at("path").get<std::string>(),
                      d.at("sha256").get<std::string>()});
    return ds;
}

}  // namespace

json to_json(const RunManifest& m) {
    return {{"tool", m.tool},
            {"version", m.version},
            {"command", m.command},
            {"args", m.args},
            {"config", m.config},
            {"seed", m.seed},
            {"threads", m.threads},
            {"inputs", digests_json(m.inputs)},
            {"outputs", digests_json(m.outputs)},
            {"started_at", m.started_at},
            {"wall_clock_seconds", m.wall_clock_seconds}};
}

RunManifest manifest_from_json(const json& j) {
    try {
        RunManifest m;
        m.tool = j.at("tool").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.args = j.at("args").get<std::vector<std::string>>();
        m.config = j.at("config");
        m.seed = j.at("seed").get<std::uint64_t>();
        m.threads = j.at("threads").get<unsigned>();
        m.inputs = digests_from(j.at("inputs"));
        m.outputs = digests_from(j.at("outputs"));
        m.started_at = j.value("started_at", "");
        m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("malformed manifest: ") + e.what());
    }
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << to_json(m).dump(2) << '\n';
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    try {
        return manifest_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
}

}  // namespace wdro::cli
