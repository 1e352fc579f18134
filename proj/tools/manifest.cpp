#include "manifest.hpp"

#include "biadapt/error.hpp"
#include "biadapt/version.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace biadapt::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

} // namespace

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot hash " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
    return hex.str();
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : m_command(std::move(command)), m_argv(std::move(argv)), m_started(utc_now()) {}

void RunManifest::add_input(const fs::path& path) {
    m_inputs[path.string()] = sha256_file(path);
    const fs::path side(path.string() + ".meta.json");
    if (fs::exists(side)) m_inputs[side.string()] = sha256_file(side);
}

void RunManifest::add_output(const fs::path& path) {
    m_outputs[path.filename().string()] = sha256_file(path);
}

void RunManifest::write(const fs::path& dir) const {
    const nlohmann::json j{
        {"command", m_command},
        {"argv", m_argv},
        {"config", m_config},
        {"seeds", m_seeds},
        {"inputs", m_inputs},
        {"outputs", m_outputs},
        {"tool_version", kVersion},
        {"started_utc", m_started},
        {"finished_utc", utc_now()},
    };
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

} // namespace biadapt::cli
