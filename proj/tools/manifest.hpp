#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace biadapt::cli {

std::string sha256_file(const std::filesystem::path& path);

/// manifest.json written next to a command's outputs: command line, config
/// snapshot, seeds, input/output digests, tool version and wall clock.
class RunManifest {
public:
    RunManifest(std::string command, std::vector<std::string> argv);

    void set_config(nlohmann::json config) { m_config = std::move(config); }
    void add_seed(const std::string& name, std::uint64_t value) { m_seeds[name] = value; }
    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);

    /// Writes <dir>/manifest.json.
    void write(const std::filesystem::path& dir) const;

private:
    std::string m_command;
    std::vector<std::string> m_argv;
    nlohmann::json m_config = nlohmann::json::object();
    nlohmann::json m_seeds = nlohmann::json::object();
    nlohmann::json m_inputs = nlohmann::json::object();
    nlohmann::json m_outputs = nlohmann::json::object();
    std::string m_started;
};

} // namespace biadapt::cli
