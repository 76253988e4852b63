#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "muir/bank.hpp"
#include "muir/synthetic.hpp"

namespace muir::io {

using json = nlohmann::json;

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);
json load_json(const std::filesystem::path& path);
std::uint64_t checksum_file(const std::filesystem::path& path);
std::string utc_timestamp();

// Rejects keys outside the allowed set; typos in config files should fail
// loudly instead of silently running defaults.
void require_known_keys(const json& obj, const std::vector<std::string>& allowed,
                        const std::string& where);

json array_to_json(const Array& a);
Array array_from_json(const json& j);

json checkpoint_to_json(const Bank& bank, const std::vector<int>& psi);
struct Checkpoint {
    Bank bank;
    std::vector<int> psi;
};
Checkpoint checkpoint_from_json(const json& j);

std::string history_csv(const std::vector<GenerationRecord>& history);
json alignment_json(const std::vector<GenerationRecord>& history);

// Artifact directory: every write is recorded, finish() emits manifest.json
// listing each artifact with its checksum.
class RunDir {
  public:
    explicit RunDir(std::filesystem::path dir);

    const std::filesystem::path& path() const { return dir_; }
    void write_artifact(const std::string& name, const std::string& content);
    void write_artifact(const std::string& name, const json& content);

    void set_config_hash(std::uint64_t h) { config_hash_ = h; }
    void set_seeds(std::vector<std::uint64_t> seeds) { seeds_ = std::move(seeds); }
    void mark_failed(std::uint64_t seed) { failed_seeds_.push_back(seed); }
    bool all_succeeded() const { return failed_seeds_.empty(); }

    void finish();

  private:
    std::filesystem::path dir_;
    std::string started_at_;
    std::uint64_t config_hash_ = 0;
    std::vector<std::uint64_t> seeds_;
    std::vector<std::uint64_t> failed_seeds_;
    std::vector<std::string> written_;
};

}  // namespace muir::io
