#include "muir/io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "muir/errors.hpp"

namespace muir::io {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw io_error("write failed: " + path.string());
}

json load_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw io_error("invalid JSON: " + path.string());
    return j;
}

std::uint64_t checksum_file(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    return fnv1a64(text.data(), text.size());
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void require_known_keys(const json& obj, const std::vector<std::string>& allowed,
                        const std::string& where) {
    if (!obj.is_object()) throw config_error(where + ": expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const std::string& a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok) throw config_error(where + ": unknown key '" + key + "'");
    }
}

json array_to_json(const Array& a) {
    json j;
    j["shape"] = a.shape();
    j["values"] = a.vec();
    return j;
}

Array array_from_json(const json& j) {
    if (!j.contains("shape") || !j.contains("values"))
        throw io_error("array json needs shape and values");
    return Array(j["shape"].get<std::vector<std::size_t>>(),
                 j["values"].get<std::vector<double>>());
}

json checkpoint_to_json(const Bank& bank, const std::vector<int>& psi) {
    json j;
    j["bank"] = {{"c", bank.config().c},
                 {"m", bank.config().m},
                 {"n", bank.config().n},
                 {"sigma_h_override", bank.config().sigma_h_override}};
    json locs = json::array();
    for (const PseudoTaskLocation& loc : bank.locations())
        locs.push_back({{"ell", loc.ell},
                        {"layer_id", loc.layer_id},
                        {"slot", loc.slot},
                        {"bi", loc.bi},
                        {"bj", loc.bj},
                        {"fan_in", loc.fan_in}});
    j["locations"] = std::move(locs);
    json mods = json::array();
    for (const auto& [id, mod] : bank.modules()) {
        json m = array_to_json(mod.tensor);
        m["id"] = id;
        m["usage"] = mod.usage;
        mods.push_back(std::move(m));
    }
    j["modules"] = std::move(mods);
    json ctxs = json::array();
    for (std::size_t ell = 0; ell < bank.location_count(); ++ell)
        ctxs.push_back(array_to_json(bank.context(ell)));
    j["contexts"] = std::move(ctxs);
    j["psi"] = psi;
    return j;
}

Checkpoint checkpoint_from_json(const json& j) {
    for (const char* key : {"bank", "locations", "modules", "contexts", "psi"})
        if (!j.contains(key)) throw io_error(std::string("checkpoint missing '") + key + "'");
    BankConfig bc;
    bc.c = j["bank"]["c"].get<std::size_t>();
    bc.m = j["bank"]["m"].get<std::size_t>();
    bc.n = j["bank"]["n"].get<std::size_t>();
    bc.sigma_h_override = j["bank"]["sigma_h_override"].get<double>();
    std::vector<PseudoTaskLocation> locations;
    for (const json& l : j["locations"]) {
        PseudoTaskLocation loc;
        loc.ell = l["ell"].get<std::size_t>();
        loc.layer_id = l["layer_id"].get<std::size_t>();
        loc.slot = l["slot"].get<std::size_t>();
        loc.bi = l["bi"].get<std::size_t>();
        loc.bj = l["bj"].get<std::size_t>();
        loc.fan_in = l["fan_in"].get<std::size_t>();
        locations.push_back(loc);
    }
    std::map<int, Hypermodule> modules;
    for (const json& m : j["modules"]) {
        Hypermodule mod;
        mod.id = m["id"].get<int>();
        mod.usage = m["usage"].get<std::size_t>();
        mod.tensor = array_from_json(m);
        modules.emplace(mod.id, std::move(mod));
    }
    std::vector<Array> contexts;
    for (const json& c : j["contexts"]) contexts.push_back(array_from_json(c));
    Checkpoint ck;
    ck.bank = Bank::from_parts(bc, std::move(locations), std::move(modules), std::move(contexts));
    ck.psi = j["psi"].get<std::vector<int>>();
    if (ck.psi.size() != ck.bank.location_count())
        throw io_error("checkpoint psi length does not match locations");
    return ck;
}

std::string history_csv(const std::vector<GenerationRecord>& history) {
    std::ostringstream out;
    out << "generation,mean_val_rmse,grouping_score,active_modules,params_reparameterized";
    const std::size_t tasks = history.empty() ? 0 : history.front().per_task_val.size();
    for (std::size_t t = 0; t < tasks; ++t) out << ",val_task_" << t;
    out << "\n";
    out.precision(10);
    for (const GenerationRecord& rec : history) {
        out << rec.gen << "," << rec.val_rmse << "," << rec.score << "," << rec.active_modules
            << "," << rec.params_reparam;
        for (double v : rec.per_task_val) out << "," << v;
        out << "\n";
    }
    return out.str();
}

json alignment_json(const std::vector<GenerationRecord>& history) {
    json gens = json::array();
    for (const GenerationRecord& rec : history)
        gens.push_back({{"generation", rec.gen}, {"psi", rec.psi}, {"score", rec.score}});
    return json{{"generations", std::move(gens)}};
}

RunDir::RunDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    started_at_ = utc_timestamp();
}

void RunDir::write_artifact(const std::string& name, const std::string& content) {
    write_text(dir_ / name, content);
    written_.push_back(name);
}

void RunDir::write_artifact(const std::string& name, const json& content) {
    write_artifact(name, content.dump(2) + "\n");
}

void RunDir::finish() {
    json manifest;
    manifest["config_hash"] = hex64(config_hash_);
    manifest["started_at"] = started_at_;
    manifest["finished_at"] = utc_timestamp();
    manifest["seeds"] = seeds_;
    manifest["failed_seeds"] = failed_seeds_;
    json files = json::array();
    for (const std::string& name : written_)
        files.push_back({{"name", name}, {"checksum", hex64(checksum_file(dir_ / name))}});
    manifest["files"] = std::move(files);
    write_text(dir_ / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace muir::io
