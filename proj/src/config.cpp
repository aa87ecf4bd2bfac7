#include "hdrseq/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace hdrseq {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": expected an unsigned integer");
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw ConfigError(key + ": trailing characters in '" + v + "'");
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true/false");
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)> set;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
    std::filesystem::path p = v;
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return (base / p).lexically_normal();
}

#define HDRSEQ_INT(KEY, MEMBER)                                                                  \
    Field {                                                                                      \
        KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },                        \
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.MEMBER = to_int(KEY, v); } \
    }
#define HDRSEQ_DOUBLE(KEY, MEMBER)                                                               \
    Field {                                                                                      \
        KEY, [](const RunConfig& c) { return fmt_double(c.MEMBER); },                            \
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.MEMBER = to_double(KEY, v); } \
    }
#define HDRSEQ_BOOL(KEY, MEMBER)                                                                 \
    Field {                                                                                      \
        KEY, [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); },        \
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.MEMBER = to_bool(KEY, v); } \
    }
#define HDRSEQ_PATH(KEY, MEMBER)                                                                 \
    Field {                                                                                      \
        KEY, [](const RunConfig& c) { return c.MEMBER.string(); },                               \
            [](RunConfig& c, const std::string& v, const std::filesystem::path& base) { c.MEMBER = resolve(base, v); } \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> f{
        HDRSEQ_INT("model.c", stage1.width),
        HDRSEQ_INT("model.c2", stage2.width),
        HDRSEQ_INT("model.k", stage2.blocks),
        HDRSEQ_BOOL("model.linearized_input", stage1.linearized_input),
        Field{"schedule.mode", [](const RunConfig& c) { return to_string(c.schedule.mode); },
              [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                  try {
                      c.schedule.mode = parse_capture_mode(v);
                  } catch (const std::invalid_argument& e) {
                      throw ConfigError(std::string("schedule.mode: ") + e.what());
                  }
              }},
        HDRSEQ_INT("schedule.t", schedule.frames),
        HDRSEQ_INT("schedule.anchors_per_window", schedule.anchors_per_window),
        HDRSEQ_INT("schedule.anchor_timestamp", schedule.anchor_timestamp),
        HDRSEQ_INT("schedule.anchor_b_timestamp", schedule.anchor_b_timestamp),
        HDRSEQ_DOUBLE("schedule.stops", schedule.stops),
        HDRSEQ_DOUBLE("schedule.mid_exposure", schedule.mid_exposure),
        HDRSEQ_DOUBLE("noise.low", noise.low),
        HDRSEQ_DOUBLE("noise.mid", noise.mid),
        HDRSEQ_DOUBLE("noise.high", noise.high),
        HDRSEQ_DOUBLE("imaging.gamma", response.gamma),
        HDRSEQ_DOUBLE("loss.kappa", tone.kappa),
        HDRSEQ_DOUBLE("loss.lambda_t", weights.lambda_t),
        HDRSEQ_DOUBLE("loss.lambda_z", weights.lambda_z),
        HDRSEQ_DOUBLE("train.lr_initial", train.lr_initial),
        HDRSEQ_DOUBLE("train.lr_final", train.lr_final),
        HDRSEQ_INT("train.batch_size", train.batch_size),
        HDRSEQ_INT("train.max_steps", train.max_steps),
        Field{"train.seed", [](const RunConfig& c) { return c.train.seed ? std::to_string(*c.train.seed) : std::string(); },
              [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                  c.train.seed = to_u64("train.seed", v);
              }},
        HDRSEQ_INT("train.patch", train.patch),
        HDRSEQ_BOOL("train.rotate", train.rotate),
        HDRSEQ_INT("train.checkpoint_every", train.checkpoint_every),
        HDRSEQ_INT("train.log_every", train.log_every),
        HDRSEQ_INT("gen.windows", gen.windows),
        HDRSEQ_INT("gen.frames", gen.frames),
        HDRSEQ_INT("gen.height", gen.height),
        HDRSEQ_INT("gen.width", gen.width),
        HDRSEQ_DOUBLE("gen.motion", gen.motion),
        HDRSEQ_DOUBLE("gen.peak", gen.peak),
        Field{"gen.seed", [](const RunConfig& c) { return std::to_string(c.gen.seed); },
              [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.gen.seed = to_u64("gen.seed", v); }},
        HDRSEQ_PATH("paths.data_manifest", paths.data_manifest),
        HDRSEQ_PATH("paths.checkpoint_dir", paths.checkpoint_dir),
        HDRSEQ_PATH("paths.report_dir", paths.report_dir),
    };
    return f;
}

#undef HDRSEQ_INT
#undef HDRSEQ_DOUBLE
#undef HDRSEQ_BOOL
#undef HDRSEQ_PATH

void validate(const RunConfig& c) {
    if (c.stage1.width < 1 || c.stage2.width < 1 || c.stage2.blocks < 0) throw ConfigError("model widths must be positive");
    if (c.noise.low < 0 || c.noise.mid < 0 || c.noise.high < 0) throw ConfigError("noise levels must be >= 0");
    if (!(c.response.gamma > 0)) throw ConfigError("imaging.gamma must be > 0");
    if (!(c.tone.kappa > 0)) throw ConfigError("loss.kappa must be > 0");
    if (c.weights.lambda_t < 0 || c.weights.lambda_z < 0) throw ConfigError("loss weights must be >= 0");
    if (!(c.train.lr_initial > 0) || !(c.train.lr_final > 0) || c.train.lr_final > c.train.lr_initial) {
        throw ConfigError("learning rates must satisfy 0 < lr_final <= lr_initial");
    }
    if (c.train.batch_size < 1 || c.train.max_steps < 0) throw ConfigError("invalid batch size or step budget");
    if (c.train.patch < 4 || c.train.patch % 4 != 0) throw ConfigError("train.patch must be a positive multiple of 4");
    try {
        build_capture_schedule(c.schedule);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

std::string RunConfig::to_text() const {
    std::ostringstream os;
    for (const auto& f : fields()) os << f.key << " = " << f.get(*this) << '\n';
    return os.str();
}

std::uint64_t RunConfig::model_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& f : fields()) {
        if (f.key.rfind("model.", 0) != 0) continue;
        for (char ch : f.key + "=" + f.get(*this) + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    RunConfig c;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        bool found = false;
        for (const auto& f : fields()) {
            if (f.key == key) {
                if (!value.empty()) f.set(c, value, base_dir);
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), file.parent_path());
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hdrseq
