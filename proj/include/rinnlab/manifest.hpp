#pragma once

// Run manifests: every CLI invocation records its resolved configuration,
// master seed, and content digests of the files it read and wrote, so a run
// can be replayed and its outputs verified.

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rinnlab/io.hpp"

namespace rinnlab {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t master_seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
    double duration_seconds = 0.0;

    void add_input(const std::filesystem::path& path) {
        inputs.emplace_back(path.string(), file_digest(path));
    }
    void add_output(const std::filesystem::path& path) {
        outputs.emplace_back(path.string(), file_digest(path));
    }

    nlohmann::json to_json() const {
        auto files = [](const std::vector<std::pair<std::string, std::string>>& fs) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& [p, d] : fs) arr.push_back({{"path", p}, {"digest", d}});
            return arr;
        };
        return {{"tool_version", kToolVersion}, {"subcommand", subcommand},
                {"config", config},            {"master_seed", master_seed},
                {"inputs", files(inputs)},     {"outputs", files(outputs)},
                {"duration_seconds", duration_seconds}};
    }

    void write(const std::filesystem::path& path) const {
        atomic_write_file(path, to_json().dump(2) + "\n");
    }
};

class ManifestTimer {
  public:
    ManifestTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace rinnlab
