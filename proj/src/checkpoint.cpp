#include "hdrseq/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "hdrseq/image_io.hpp"

namespace hdrseq {

namespace {

constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    template <typename T>
    void put(T v) {
        const char* p = reinterpret_cast<const char*>(&v);
        buf.insert(buf.end(), p, p + sizeof(T));
    }
    void put_string(const std::string& s) {
        put(static_cast<std::uint32_t>(s.size()));
        buf.insert(buf.end(), s.begin(), s.end());
    }
    void put_doubles(std::span<const double> v) {
        const char* p = reinterpret_cast<const char*>(v.data());
        buf.insert(buf.end(), p, p + v.size() * sizeof(double));
    }
    std::vector<char> buf;
};

class Reader {
public:
    explicit Reader(const std::vector<char>& b) : buf_(b) {}
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string get_string() {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    void get_doubles(std::span<double> out) {
        need(out.size() * sizeof(double));
        std::memcpy(out.data(), buf_.data() + pos_, out.size() * sizeof(double));
        pos_ += out.size() * sizeof(double);
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw IoError("checkpoint truncated");
    }
    const std::vector<char>& buf_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<char> serialize_checkpoint(const RunConfig& config, const Model& model, const Adam& optimizer,
                                       std::uint64_t step) {
    const ParamSet ps = model.parameters();
    if (optimizer.first_moments().size() != ps.entries().size()) {
        throw std::logic_error("optimizer state does not match the model");
    }
    Writer w;
    w.buf.insert(w.buf.end(), {'H', 'S', 'C', 'K'});
    w.put(kVersion);
    w.put(config.model_hash());
    w.put(step);
    w.put(optimizer.steps());
    w.put_string(config.to_text());
    w.put(static_cast<std::uint32_t>(ps.entries().size()));
    std::size_t i = 0;
    for (const auto& [name, t] : ps.entries()) {
        w.put_string(name);
        w.put(static_cast<std::int32_t>(t.shape().c));
        w.put(static_cast<std::int32_t>(t.shape().h));
        w.put(static_cast<std::int32_t>(t.shape().w));
        w.put_doubles(t.values());
        w.put_doubles(optimizer.first_moments()[i]);
        w.put_doubles(optimizer.second_moments()[i]);
        ++i;
    }
    return std::move(w.buf);
}

Checkpoint deserialize_checkpoint(const std::vector<char>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "HSCK", 4) != 0) throw IoError("not a checkpoint");
    std::vector<char> body(bytes.begin() + 4, bytes.end());
    Reader r(body);
    if (r.get<std::uint32_t>() != kVersion) throw IoError("unsupported checkpoint version");
    Checkpoint ck;
    ck.model_hash = r.get<std::uint64_t>();
    ck.step = r.get<std::uint64_t>();
    const auto adam_steps = r.get<std::uint64_t>();
    ck.config = parse_config(r.get_string());
    if (ck.config.model_hash() != ck.model_hash) throw IoError("checkpoint model hash does not match its config");
    // Architecture comes from the stored config; values are overwritten below.
    ck.model = Model(ck.config.stage1, ck.config.stage2, 0);
    const ParamSet ps = ck.model.parameters();
    ck.optimizer = Adam(ps);
    ck.optimizer.set_steps(adam_steps);
    const auto count = r.get<std::uint32_t>();
    if (count != ps.entries().size()) throw IoError("checkpoint parameter count mismatch");
    std::size_t i = 0;
    for (const auto& [name, t] : ps.entries()) {
        if (r.get_string() != name) throw IoError("checkpoint parameter order mismatch at " + name);
        const Shape s{r.get<std::int32_t>(), r.get<std::int32_t>(), r.get<std::int32_t>()};
        if (!(s == t.shape())) throw IoError("checkpoint shape mismatch for " + name);
        Tensor p = t;
        r.get_doubles(p.mutable_values());
        r.get_doubles(ck.optimizer.first_moments()[i]);
        r.get_doubles(ck.optimizer.second_moments()[i]);
        ++i;
    }
    if (!r.done()) throw IoError("trailing bytes in checkpoint");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const Model& model,
                     const Adam& optimizer, std::uint64_t step) {
    const auto bytes = serialize_checkpoint(config, model, optimizer, step);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace hdrseq
