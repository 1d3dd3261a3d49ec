#pragma once

// Experiment pipelines behind the command-line tool: JSON configuration with
// dotted-key overrides, record files, and checksummed run manifests.
// Requires OpenSSL libcrypto for SHA-256.

#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <gsl/gsl_version.h>

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "nlqm/circuit.hpp"
#include "nlqm/io.hpp"
#include "nlqm/lut.hpp"
#include "nlqm/povm.hpp"
#include "nlqm/states.hpp"
#include "nlqm/tomography.hpp"

namespace nlqm {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kRecordsSchema = "nlqm.records/1";

// ---------------------------------------------------------------------------
// Configuration

struct PovmSettings {
    double q_range = 0.6;
    int q_nodes = 16;
    int m_nodes = 3;
    int mixture_nodes = 8;
};

struct WignerSettings {
    double extent = 7.0;
    int points = 141;
};

struct RunConfig {
    double gamma = 0.52;
    std::optional<std::uint64_t> seed;  // mandatory; never taken from the clock
    std::filesystem::path out = "run";
    AncillaSpec ancilla = AncillaSpec::canonical();
    std::optional<double> ancilla_target_variance;  // calibrates ancilla.efficiency when set
    LossModel loss = LossModel::paper();
    ProbeSet probes = ProbeSet::paper();
    BinningScheme binning;
    FeedforwardPolicy::Mode mode = FeedforwardPolicy::Mode::exact;
    LutGeometry lut;
    ResidualOffsetParams offset;
    int povm_n_max = 30;
    PovmSettings povm;
    MleOptions mle;  // mle.n_max is the tomography cutoff
    BootstrapOptions bootstrap;
    std::filesystem::path records;
    std::filesystem::path operator_path;
    WignerSettings wigner;
    int threads = 1;
    bool replay = false;

    void validate() const {
        if (!std::isfinite(gamma)) throw ConfigError("gamma", "must be finite");
        if (!seed) throw ConfigError("seed", "a seed is required (set it in the config or pass --seed)");
        if (out.empty()) throw ConfigError("out", "output directory must be named");
        ancilla.validate();
        if (ancilla_target_variance && !(*ancilla_target_variance > 0.0))
            throw ConfigError("ancilla.target_variance", "must be positive");
        loss.validate();
        try {
            probes.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("probes", e.what());
        }
        binning.validate();
        lut.validate();
        offset.validate();
        if (povm_n_max < 2) throw ConfigError("n_max.povm", "must be >= 2");
        if (mle.n_max < 1) throw ConfigError("n_max.tomography", "must be >= 1");
        if (!(povm.q_range > 0.0)) throw ConfigError("povm.q_range", "must be positive");
        if (povm.q_nodes < 2) throw ConfigError("povm.q_nodes", "must be >= 2");
        if (povm.m_nodes < 1) throw ConfigError("povm.m_nodes", "must be >= 1");
        if (povm.mixture_nodes < 1) throw ConfigError("povm.mixture_nodes", "must be >= 1");
        if (mle.max_iterations < 1) throw ConfigError("tomography.max_iterations", "must be >= 1");
        if (!(mle.tolerance > 0.0)) throw ConfigError("tomography.tolerance", "must be positive");
        if (bootstrap.resamples != 0 && bootstrap.resamples < 50)
            throw ConfigError("tomography.bootstrap.resamples", "use 0 to skip or at least 50");
        if (bootstrap.warm_iterations < 1) throw ConfigError("tomography.bootstrap.warm_iterations", "must be >= 1");
        if (!(wigner.extent > 0.0)) throw ConfigError("wigner.extent", "must be positive");
        if (wigner.points < 2) throw ConfigError("wigner.points", "must be >= 2");
        if (threads < 1) throw ConfigError("threads", "must be >= 1");
    }

    FockConfig fock() const { return {povm_n_max, 1.0}; }

    FeedforwardPolicy policy() const {
        switch (mode) {
            case FeedforwardPolicy::Mode::lut:
                return FeedforwardPolicy::quantized(std::make_shared<const LutTable>(build_lut(gamma, lut)));
            case FeedforwardPolicy::Mode::disabled:
                return FeedforwardPolicy::disabled(gamma);
            default:
                return FeedforwardPolicy::exact(gamma);
        }
    }

    /// Ancilla density operator at the POVM cutoff, with calibration applied.
    FockOperator ancilla_operator() const {
        AncillaSpec s = ancilla;
        if (ancilla_target_variance) {
            if (s.kind != AncillaSpec::Kind::fock_superposition || s.coefficients != AncillaSpec::canonical().coefficients)
                throw ConfigError("ancilla.target_variance", "calibration is defined for the canonical ancilla only");
            try {
                s.efficiency = calibrate_ancilla_efficiency(*ancilla_target_variance, gamma, fock());
            } catch (const std::invalid_argument& e) {
                throw ConfigError("ancilla.target_variance", e.what());
            }
        }
        return ancilla_state(s, fock());
    }

    int effective_threads() const { return replay ? 1 : threads; }

    Json to_json() const;
    static RunConfig from_json(const Json& j);
};

namespace detail {

inline const char* mode_name(FeedforwardPolicy::Mode m) {
    switch (m) {
        case FeedforwardPolicy::Mode::lut:
            return "lut";
        case FeedforwardPolicy::Mode::disabled:
            return "disabled";
        default:
            return "exact";
    }
}

inline const char* kind_name(AncillaSpec::Kind k) {
    switch (k) {
        case AncillaSpec::Kind::vacuum:
            return "vacuum";
        case AncillaSpec::Kind::density_file:
            return "density_file";
        default:
            return "fock_superposition";
    }
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json path_json(const std::filesystem::path& p) { return p.empty() ? Json(nullptr) : Json(p.generic_string()); }

/// Rejects keys the schema does not know, naming the full dotted path.
inline void check_keys(const Json& given, const Json& schema, const std::string& prefix) {
    if (!given.is_object()) return;
    if (!schema.is_object()) throw ConfigError(prefix, "expected a value, got an object");
    for (const auto& [k, v] : given.items()) {
        const std::string path = prefix.empty() ? k : prefix + "." + k;
        if (!schema.contains(k)) throw ConfigError(path, "unknown key");
        if (v.is_object()) check_keys(v, schema[k], path);
    }
}

inline const Json& at_path(const Json& root, const std::string& path) {
    const Json* node = &root;
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(key)) throw ConfigError(path, "missing");
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return *node;
}

inline double number(const Json& root, const std::string& path) {
    const Json& v = at_path(root, path);
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

inline int integer(const Json& root, const std::string& path) {
    const Json& v = at_path(root, path);
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<int>();
}

inline bool boolean(const Json& root, const std::string& path) {
    const Json& v = at_path(root, path);
    if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    return v.get<bool>();
}

inline std::string text(const Json& root, const std::string& path) {
    const Json& v = at_path(root, path);
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

inline std::filesystem::path optional_path(const Json& root, const std::string& path) {
    const Json& v = at_path(root, path);
    if (v.is_null()) return {};
    if (!v.is_string()) throw ConfigError(path, "expected a path string or null");
    return v.get<std::string>();
}

}  // namespace detail

inline Json RunConfig::to_json() const {
    Json coeffs = Json::array();
    for (const auto& c : ancilla.coefficients) coeffs.push_back({c.real(), c.imag()});
    Json amps = Json::array();
    for (double a : probes.amplitudes) amps.push_back(a);
    return Json{
        {"gamma", gamma},
        {"seed", seed ? Json(*seed) : Json(nullptr)},
        {"out", out.generic_string()},
        {"threads", threads},
        {"replay", replay},
        {"ancilla",
         {{"kind", detail::kind_name(ancilla.kind)},
          {"coefficients", coeffs},
          {"path", detail::path_json(ancilla.path)},
          {"efficiency", ancilla.efficiency},
          {"target_variance", detail::optional_json(ancilla_target_variance)}}},
        {"loss", {{"eta1", loss.eta1}, {"eta2", loss.eta2}}},
        {"probes", {{"amplitudes", amps}, {"shots_per_amplitude", probes.shots_per_amplitude}}},
        {"binning",
         {{"m_bins", binning.m_bins},
          {"m_lo", binning.m_lo},
          {"m_hi", binning.m_hi},
          {"q_window", binning.q_window},
          {"phase_bins", binning.phase_bins}}},
        {"feedforward", {{"mode", detail::mode_name(mode)}}},
        {"lut", {{"input_bits", lut.input_bits}, {"output_bits", lut.output_bits}, {"input_range", lut.input_range}}},
        {"offset",
         {{"enabled", offset.enabled}, {"amplitude_coeff", offset.amplitude_coeff}, {"phase_bias", offset.phase_bias}}},
        {"n_max", {{"povm", povm_n_max}, {"tomography", mle.n_max}}},
        {"povm",
         {{"q_range", povm.q_range},
          {"q_nodes", povm.q_nodes},
          {"m_nodes", povm.m_nodes},
          {"mixture_nodes", povm.mixture_nodes}}},
        {"tomography",
         {{"records", detail::path_json(records)},
          {"max_iterations", mle.max_iterations},
          {"tolerance", mle.tolerance},
          {"bootstrap",
           {{"resamples", bootstrap.resamples},
            {"full", bootstrap.full},
            {"warm_iterations", bootstrap.warm_iterations}}}}},
        {"wigner", {{"operator", detail::path_json(operator_path)}, {"extent", wigner.extent}, {"points", wigner.points}}},
    };
}

/// Missing keys take their defaults; unknown keys and wrong types are
/// rejected with the dotted key in the message.
inline RunConfig RunConfig::from_json(const Json& given) {
    using namespace detail;
    if (!given.is_object()) throw ConfigError("", "configuration must be a JSON object");
    const Json schema = RunConfig{}.to_json();
    check_keys(given, schema, "");
    Json j = schema;
    j.merge_patch(given);
    // merge_patch drops keys set to null; restore them so lookups see the null.
    for (const char* k : {"seed"})
        if (!j.contains(k)) j[k] = nullptr;
    for (const auto& [path, parent, key] : {std::tuple{"ancilla.path", "ancilla", "path"},
                                            std::tuple{"ancilla.target_variance", "ancilla", "target_variance"},
                                            std::tuple{"tomography.records", "tomography", "records"},
                                            std::tuple{"wigner.operator", "wigner", "operator"}})
        if (!j[parent].contains(key)) j[parent][key] = nullptr;

    RunConfig c;
    c.gamma = number(j, "gamma");
    if (!j["seed"].is_null()) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw ConfigError("seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.out = text(j, "out");
    c.threads = integer(j, "threads");
    c.replay = boolean(j, "replay");

    const std::string kind = text(j, "ancilla.kind");
    if (kind == "vacuum") {
        c.ancilla.kind = AncillaSpec::Kind::vacuum;
        c.ancilla.coefficients.clear();
    } else if (kind == "canonical") {
        c.ancilla = AncillaSpec::canonical();
    } else if (kind == "fock_superposition") {
        c.ancilla.kind = AncillaSpec::Kind::fock_superposition;
        const Json& arr = at_path(j, "ancilla.coefficients");
        if (!arr.is_array()) throw ConfigError("ancilla.coefficients", "expected an array of [re, im] pairs");
        c.ancilla.coefficients.clear();
        for (const auto& e : arr) {
            if (e.is_number())
                c.ancilla.coefficients.emplace_back(e.get<double>(), 0.0);
            else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
                c.ancilla.coefficients.emplace_back(e[0].get<double>(), e[1].get<double>());
            else
                throw ConfigError("ancilla.coefficients", "entries must be numbers or [re, im] pairs");
        }
    } else if (kind == "density_file") {
        c.ancilla.kind = AncillaSpec::Kind::density_file;
        c.ancilla.coefficients.clear();
    } else {
        throw ConfigError("ancilla.kind", "expected vacuum, canonical, fock_superposition or density_file");
    }
    c.ancilla.path = optional_path(j, "ancilla.path");
    c.ancilla.efficiency = number(j, "ancilla.efficiency");
    if (!j["ancilla"]["target_variance"].is_null()) c.ancilla_target_variance = number(j, "ancilla.target_variance");

    c.loss = {number(j, "loss.eta1"), number(j, "loss.eta2")};

    const Json& amps = at_path(j, "probes.amplitudes");
    if (!amps.is_array()) throw ConfigError("probes.amplitudes", "expected an array of numbers");
    c.probes.amplitudes.clear();
    for (const auto& a : amps) {
        if (!a.is_number()) throw ConfigError("probes.amplitudes", "expected an array of numbers");
        c.probes.amplitudes.push_back(a.get<double>());
    }
    {
        const Json& s = at_path(j, "probes.shots_per_amplitude");
        if (!s.is_number_integer() || s.get<long long>() < 1)
            throw ConfigError("probes.shots_per_amplitude", "expected a positive integer");
        c.probes.shots_per_amplitude = s.get<std::size_t>();
    }

    c.binning = {integer(j, "binning.m_bins"), number(j, "binning.m_lo"), number(j, "binning.m_hi"),
                 number(j, "binning.q_window"), integer(j, "binning.phase_bins")};

    const std::string mode = text(j, "feedforward.mode");
    if (mode == "exact")
        c.mode = FeedforwardPolicy::Mode::exact;
    else if (mode == "lut")
        c.mode = FeedforwardPolicy::Mode::lut;
    else if (mode == "disabled")
        c.mode = FeedforwardPolicy::Mode::disabled;
    else
        throw ConfigError("feedforward.mode", "expected exact, lut or disabled");

    c.lut = {integer(j, "lut.input_bits"), integer(j, "lut.output_bits"), number(j, "lut.input_range")};
    c.offset.enabled = boolean(j, "offset.enabled");
    c.offset.amplitude_coeff = number(j, "offset.amplitude_coeff");
    c.offset.phase_bias = number(j, "offset.phase_bias");

    c.povm_n_max = integer(j, "n_max.povm");
    c.mle.n_max = integer(j, "n_max.tomography");
    c.povm = {number(j, "povm.q_range"), integer(j, "povm.q_nodes"), integer(j, "povm.m_nodes"),
              integer(j, "povm.mixture_nodes")};

    c.records = optional_path(j, "tomography.records");
    c.mle.max_iterations = integer(j, "tomography.max_iterations");
    c.mle.tolerance = number(j, "tomography.tolerance");
    c.bootstrap.resamples = integer(j, "tomography.bootstrap.resamples");
    c.bootstrap.full = boolean(j, "tomography.bootstrap.full");
    c.bootstrap.warm_iterations = integer(j, "tomography.bootstrap.warm_iterations");

    c.operator_path = optional_path(j, "wigner.operator");
    c.wigner = {number(j, "wigner.extent"), integer(j, "wigner.points")};
    return c;
}

/// Applies `key.path=value`; the value is read as JSON when it parses and as
/// a plain string otherwise.
inline void apply_override(Json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key.path=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    Json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(key, "empty key segment");
        if (!node->is_object()) *node = Json::object();
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

inline Json load_config_json(const std::filesystem::path& path) {
    const Json j = Json::parse(read_text(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("", path.string() + " is not valid JSON");
    return j;
}

// ---------------------------------------------------------------------------
// Checksums and manifests

inline std::string to_hex(const unsigned char* data, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(2 * n, '0');
    for (std::size_t i = 0; i < n; ++i) {
        s[2 * i] = digits[data[i] >> 4];
        s[2 * i + 1] = digits[data[i] & 0xf];
    }
    return s;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialisation failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_, data, n) != 1) throw Error("SHA-256 update failed");
    }

    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, md, &len) != 1) throw Error("SHA-256 finalisation failed");
        return to_hex(md, len);
    }

private:
    EVP_MD_CTX* ctx_;
};

inline std::string sha256(std::string_view data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError("cannot open " + path.string());
    Sha256 h;
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

/// Hash of the canonical (sorted, compact) dump of the resolved config.
/// The output directory, thread count and replay flag do not change results
/// and are left out.
inline std::string config_hash(const RunConfig& c) {
    Json j = c.to_json();
    j.erase("out");
    j.erase("threads");
    j.erase("replay");
    return sha256(j.dump());
}

struct Artifact {
    std::string path;  // relative to the output directory, or as given for inputs
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    Json config;
    std::vector<Artifact> inputs;
    std::vector<Artifact> artifacts;
    std::vector<std::pair<std::string, double>> timings;  // seconds; omitted in replay mode

    Json to_json(bool replay) const {
        auto list = [](const std::vector<Artifact>& v) {
            Json a = Json::array();
            for (const auto& x : v) a.push_back({{"path", x.path}, {"sha256", x.sha256}, {"bytes", x.bytes}});
            return a;
        };
        Json j{{"command", command},
               {"config_hash", config_hash},
               {"config", config},
               {"inputs", list(inputs)},
               {"artifacts", list(artifacts)},
               {"versions",
                {{"nlqm", kVersion},
                 {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                               std::to_string(EIGEN_MINOR_VERSION)},
                 {"gsl", GSL_VERSION},
                 {"openssl", OPENSSL_VERSION_TEXT}}},
               {"replay", replay}};
        if (!replay) {
            Json t = Json::object();
            for (const auto& [k, v] : timings) t[k] = v;
            j["timings"] = t;
        }
        return j;
    }
};

/// Collects artifacts written under one output directory and finally the manifest.
class RunWriter {
public:
    RunWriter(const RunConfig& cfg, std::string command) : cfg_(cfg) {
        manifest_.command = std::move(command);
        manifest_.config_hash = config_hash(cfg);
        Json c = cfg.to_json();
        c.erase("out");
        c.erase("threads");
        c.erase("replay");
        manifest_.config = std::move(c);
        std::filesystem::create_directories(cfg.out);
    }

    const std::filesystem::path& dir() const { return cfg_.out; }

    std::filesystem::path path(const std::string& name) const { return cfg_.out / name; }

    void add_input(const std::filesystem::path& p) {
        manifest_.inputs.push_back({p.filename().generic_string(), sha256_file(p), std::filesystem::file_size(p)});
    }

    void add(const std::string& name) {
        const auto p = path(name);
        manifest_.artifacts.push_back({name, sha256_file(p), std::filesystem::file_size(p)});
    }

    void write(const std::string& name, const std::string& text) {
        write_text(path(name), text);
        add(name);
    }

    template <typename F>
    auto timed(const std::string& stage, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            stop(stage, t0);
        } else {
            auto r = f();
            stop(stage, t0);
            return r;
        }
    }

    const RunManifest& manifest() const { return manifest_; }

    /// Writes manifest.json and returns its text.
    std::string finish() {
        const std::string text = manifest_.to_json(cfg_.replay).dump(2) + "\n";
        write_text(path("manifest.json"), text);
        return text;
    }

private:
    void stop(const std::string& stage, std::chrono::steady_clock::time_point t0) {
        manifest_.timings.emplace_back(stage,
                                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    RunConfig cfg_;
    RunManifest manifest_;
};

// ---------------------------------------------------------------------------
// Record files

inline void append_number(std::string& s, double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    s.append(buf, r.ptr);
}

inline constexpr const char* kRecordHeader = "probe_ax,probe_ap,q,y,m,theta";

inline std::string records_csv(std::span<const MeasurementRecord> records) {
    std::string s;
    s.reserve(records.size() * 110 + 40);
    s += kRecordHeader;
    s += '\n';
    for (const auto& r : records) {
        for (double v : {r.probe.alpha_x, r.probe.alpha_p, r.q, r.y, r.m}) {
            append_number(s, v);
            s += ',';
        }
        append_number(s, r.theta);
        s += '\n';
    }
    return s;
}

inline std::vector<MeasurementRecord> parse_records_csv(std::string_view text, const std::string& source = "records") {
    const auto nl = text.find('\n');
    std::string_view header = text.substr(0, nl);
    if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
    if (header != kRecordHeader)
        throw FileFormatError(source + ": header must be '" + kRecordHeader + "'");
    std::vector<MeasurementRecord> out;
    std::size_t pos = nl == std::string_view::npos ? text.size() : nl + 1;
    std::size_t line = 1;
    while (pos < text.size()) {
        ++line;
        double v[6];
        const char* p = text.data() + pos;
        const char* end = text.data() + text.size();
        for (int k = 0; k < 6; ++k) {
            const auto r = std::from_chars(p, end, v[k]);
            if (r.ec != std::errc{}) throw FileFormatError(source + ": bad number on line " + std::to_string(line));
            p = r.ptr;
            const char want = k < 5 ? ',' : '\n';
            if (p < end && *p == '\r') ++p;
            if (p < end && *p != want) throw FileFormatError(source + ": expected 6 columns on line " + std::to_string(line));
            if (p < end) ++p;
        }
        out.push_back({{v[0], v[1]}, v[2], v[3], v[4], v[5]});
        pos = static_cast<std::size_t>(p - text.data());
    }
    return out;
}

/// Sidecar next to a record file: schema tag, row count and the probe grid.
inline std::filesystem::path sidecar_path(const std::filesystem::path& records) {
    auto p = records;
    return p.replace_extension(".json");
}

struct RecordSet {
    std::vector<MeasurementRecord> records;
    std::vector<double> amplitudes;
    std::optional<double> gamma;
};

inline RecordSet load_records(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw FileFormatError("missing input: " + path.string());
    RecordSet s;
    s.records = parse_records_csv(read_text(path), path.string());
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        const Json j = Json::parse(read_text(side), nullptr, false);
        if (j.is_discarded() || j.value("schema", "") != kRecordsSchema)
            throw FileFormatError(side.string() + ": not a " + kRecordsSchema + " sidecar");
        if (j.value("count", std::size_t{0}) != s.records.size())
            throw FileFormatError(side.string() + ": row count does not match the record file");
        for (const auto& a : j.at("amplitudes")) s.amplitudes.push_back(a.get<double>());
        if (j.contains("gamma")) s.gamma = j["gamma"].get<double>();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Pipelines

struct CommandOutput {
    std::string manifest;  // text of manifest.json
    Json summary;
};

inline std::string summary_text(const Json& s) { return s.dump(2) + "\n"; }

inline CommandOutput cmd_simulate(const RunConfig& cfg) {
    cfg.validate();
    RunWriter w(cfg, "simulate");
    const FockOperator anc = cfg.ancilla_operator();
    const ShotSimulator sim(anc, cfg.policy(), cfg.loss, cfg.offset);
    const auto probes = w.timed("probes", [&] { return generate_probe_set(cfg.probes, *cfg.seed); });
    const auto recs = w.timed("simulate", [&] { return sim.run(probes, *cfg.seed, cfg.effective_threads()); });
    w.timed("write", [&] {
        write_text(w.path("records.csv"), records_csv(recs));
        w.add("records.csv");
    });
    Json amps = Json::array();
    for (double a : cfg.probes.amplitudes) amps.push_back(a);
    const Json side{{"schema", kRecordsSchema},
                    {"columns", {"probe_ax", "probe_ap", "q", "y", "m", "theta"}},
                    {"count", recs.size()},
                    {"amplitudes", amps},
                    {"shots_per_amplitude", cfg.probes.shots_per_amplitude},
                    {"gamma", cfg.gamma},
                    {"seed", *cfg.seed}};
    w.write("records.json", side.dump(2) + "\n");

    double mean = 0.0;
    for (const auto& r : recs) mean += r.m;
    mean /= static_cast<double>(std::max<std::size_t>(recs.size(), 1));
    double ss = 0.0;
    for (const auto& r : recs) ss += (r.m - mean) * (r.m - mean);
    Json summary{{"records", recs.size()},
                 {"mean_m", mean},
                 {"stderr_m", recs.size() > 1 ? std::sqrt(ss / static_cast<double>(recs.size() - 1) /
                                                          static_cast<double>(recs.size()))
                                              : 0.0}};
    w.write("summary.json", summary_text(summary));
    return {w.finish(), summary};
}

/// Theory lines: per-bin detector-state variances for the ideal and the
/// imperfect circuit, and the two averaged detector states.
inline CommandOutput cmd_povm(const RunConfig& cfg) {
    cfg.validate();
    RunWriter w(cfg, "povm");
    const FockOperator anc = cfg.ancilla_operator();
    const BinningScheme& b = cfg.binning;
    auto bins = [&](const LossModel& loss) {
        const DetectorModel model(anc, cfg.gamma, loss, cfg.fock(), cfg.povm.mixture_nodes);
        std::vector<PovmElement> out;
        for (int k = 0; k < b.m_bins; ++k)
            out.push_back(model.bin_element(b.m_lo + k * b.width(), b.m_lo + (k + 1) * b.width(), cfg.povm.q_range,
                                            cfg.povm.q_nodes, cfg.povm.m_nodes));
        return out;
    };
    const auto ideal = w.timed("ideal", [&] { return bins({1.0, 1.0}); });
    const auto lossy = w.timed("imperfect", [&] { return bins(cfg.loss); });
    const DetectorState ideal_avg = averaged_detector_state(ideal, cfg.gamma);
    const DetectorState lossy_avg = averaged_detector_state(lossy, cfg.gamma);

    std::string csv = "m,variance_ideal,variance_imperfect\n";
    for (int k = 0; k < b.m_bins; ++k)
        csv += fmt(b.centre(k)) + ',' + fmt(ideal[k].variance(cfg.gamma)) + ',' + fmt(lossy[k].variance(cfg.gamma)) + '\n';
    w.write("povm_variances.csv", csv);
    w.write("detector_state_ideal.json", operator_to_json(ideal_avg.op).dump() + "\n");
    w.write("detector_state_imperfect.json", operator_to_json(lossy_avg.op).dump() + "\n");
    w.write("ancilla.json", operator_to_json(anc).dump() + "\n");

    const Json summary{{"ancilla_variance", nonlinear_variance(anc, {cfg.gamma, -1})},
                       {"averaged_variance_ideal", ideal_avg.variance},
                       {"averaged_variance_imperfect", lossy_avg.variance},
                       {"gaussian_bound", gaussian_bound(cfg.gamma).value}};
    w.write("summary.json", summary_text(summary));
    return {w.finish(), summary};
}

inline CommandOutput cmd_tomo(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.records.empty()) throw ConfigError("tomography.records", "tomo needs a record file (--input)");
    RunWriter w(cfg, "tomo");
    const RecordSet data = w.timed("read", [&] { return load_records(cfg.records); });
    w.add_input(cfg.records);
    if (std::filesystem::exists(sidecar_path(cfg.records))) w.add_input(sidecar_path(cfg.records));
    const std::vector<double> amps = data.amplitudes.empty() ? cfg.probes.amplitudes : data.amplitudes;
    const double gamma = data.gamma.value_or(cfg.gamma);

    const FrequencyTable table = bin_outcomes(data.records, amps, cfg.binning);
    const TomographyResult fit = w.timed("mle", [&] { return mle_reconstruct(table, cfg.mle); });
    if (!fit.converged)
        throw OptimizationDidNotConverge("MLE stopped after " + std::to_string(fit.iterations) +
                                         " iterations without meeting the tolerance");
    BootstrapResult boot;
    if (cfg.bootstrap.resamples > 0) {
        BootstrapOptions bo = cfg.bootstrap;
        bo.threads = cfg.effective_threads();
        boot = w.timed("bootstrap", [&] { return bootstrap_variance(table, fit, gamma, cfg.mle, bo, *cfg.seed); });
    }

    const int bins = cfg.binning.m_bins;
    const auto vars = fit.variances(gamma, bins);
    std::string csv = "m,variance,error,events\n";
    std::vector<PovmElement> populated;
    for (int k = 0; k < bins; ++k) {
        const double err = boot.stddev.empty() ? kNaN : boot.stddev[static_cast<std::size_t>(k)];
        csv += fmt(cfg.binning.centre(k)) + ',' + fmt(vars[static_cast<std::size_t>(k)]) + ',' + fmt(err) + ',' +
               fmt(table.counts.col(k).sum()) + '\n';
        if (!std::isnan(vars[static_cast<std::size_t>(k)])) populated.push_back(fit.elements[static_cast<std::size_t>(k)]);
    }
    w.write("tomo_variances.csv", csv);
    // Bin elements in order, then the complement outcome (label null).
    Json labels = Json::array(), elements = Json::array();
    for (int k = 0; k < bins; ++k) labels.push_back(cfg.binning.centre(k));
    labels.push_back(nullptr);
    for (const auto& e : fit.elements) elements.push_back(operator_to_json(e.op));
    w.write("elements.json", Json{{"m", labels}, {"elements", elements}}.dump() + "\n");
    Json summary{{"records", data.records.size()},
                 {"in_window", table.in_window()},
                 {"iterations", fit.iterations},
                 {"converged", fit.converged},
                 {"log_likelihood", fit.log_likelihood.back()},
                 {"completeness_defect", fit.completeness_defect}};
    if (!populated.empty()) {
        const DetectorState avg = averaged_detector_state(populated, gamma);
        w.write("detector_state.json", operator_to_json(avg.op).dump() + "\n");
        summary["averaged_variance"] = avg.variance;
    }
    w.write("summary.json", summary_text(summary));
    return {w.finish(), summary};
}

inline CommandOutput cmd_wigner(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.operator_path.empty()) throw ConfigError("wigner.operator", "wigner needs an operator file (--input)");
    if (!std::filesystem::exists(cfg.operator_path)) throw FileFormatError("missing input: " + cfg.operator_path.string());
    RunWriter w(cfg, "wigner");
    const FockOperator op = load_operator(cfg.operator_path);
    w.add_input(cfg.operator_path);
    const auto xs = linspace(-cfg.wigner.extent, cfg.wigner.extent, cfg.wigner.points);
    const auto grid = w.timed("wigner", [&] { return wigner_grid(op.normalized(), xs, xs); });
    w.write("wigner.csv", wigner_csv(grid));
    const Json summary{{"dim", op.dim()}, {"min", grid.min()}, {"max", grid.max()}};
    w.write("summary.json", summary_text(summary));
    return {w.finish(), summary};
}

inline CommandOutput cmd_bound(const RunConfig& cfg) {
    cfg.validate();
    RunWriter w(cfg, "bound");
    if (cfg.gamma < 0.0) throw ConfigError("gamma", "the bound is defined for gamma >= 0");
    const GaussianBound b = gaussian_bound(cfg.gamma);
    const Json summary{{"gamma", cfg.gamma},
                       {"bound", b.value},
                       {"attained", b.attained},
                       {"argmin", {{"r", b.argmin[0]}, {"phi", b.argmin[1]}, {"d", b.argmin[2]}, {"dp", b.argmin[3]}}}};
    w.write("summary.json", summary_text(summary));
    return {w.finish(), summary};
}

inline CommandOutput cmd_lut_check(const RunConfig& cfg) {
    cfg.validate();
    RunWriter w(cfg, "lut-check");
    const LutTable t = build_lut(cfg.gamma, cfg.lut);
    std::string csv = "input_code,q,output_code,theta_lut,theta_exact,error\n";
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(t.codes().size()); ++i) {
        const double q = t.code_center(i);
        const std::int32_t c = t.codes()[static_cast<std::size_t>(i)];
        const double exact = feedforward_angle(q, cfg.gamma);
        csv += std::to_string(i) + ',' + fmt(q) + ',' + std::to_string(c) + ',' + fmt(t.angle_of(c)) + ',' + fmt(exact) +
               ',' + fmt(t.angle_of(c) - exact) + '\n';
    }
    w.write("lut.csv", csv);
    const LatencyReport lat = latency_report(LatencyBudget::board_default());
    Json stages = Json::array();
    for (const auto& [name, ns] : lat.stages_ns) stages.push_back({{"stage", name}, {"ns", ns}});
    w.write("latency.json", Json{{"total_ns", lat.total_ns}, {"optical_path_m", lat.optical_path_m}, {"stages", stages}}
                                .dump(2) + "\n");
    const Json summary{{"max_error", lut_max_error(t)},
                       {"error_bound", t.error_bound()},
                       {"output_step", t.output_step()},
                       {"latency_ns", lat.total_ns}};
    w.write("summary.json", summary_text(summary));
    return {w.finish(), summary};
}

}  // namespace nlqm
