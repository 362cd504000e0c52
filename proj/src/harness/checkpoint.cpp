#include "nlimb/harness/checkpoint.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlimb/errors.hpp"

namespace nlimb {
namespace {

constexpr std::string_view kMagic = "NLMB";

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    bytes_.append(s);
  }
  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (double x : v) f64(x);
  }
  void mat(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  void flags(const std::vector<bool>& b) {
    u64(b.size());
    for (bool x : b) u8(x ? 1 : 0);
  }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string section)
      : bytes_(bytes), section_(std::move(section)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count(std::size_t element_size) {
    const auto n = u64();
    if (element_size > 0 && n > (bytes_.size() - pos_) / element_size)
      fail("length exceeds section size");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const auto n = count(1);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  Eigen::VectorXd vec() {
    Eigen::VectorXd v(static_cast<Eigen::Index>(count(8)));
    for (auto& x : v) x = f64();
    return v;
  }
  Eigen::MatrixXd mat() {
    const auto r = u64();
    const auto c = count(0);
    if (r != 0 && c > (bytes_.size() - pos_) / 8 / r) fail("matrix exceeds section size");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }
  std::vector<bool> flags() {
    std::vector<bool> b(count(1));
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = u8() != 0;
    return b;
  }
  void finish() const {
    if (pos_ != bytes_.size()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw LoadError("checkpoint section '" + section_ + "': " + what);
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated");
  }
  std::string_view bytes_;
  std::string section_;
  std::size_t pos_ = 0;
};

void write_mlp(Writer& w, const MlpParamsd& p) {
  w.u64(p.spec().layer_sizes.size());
  for (auto s : p.spec().layer_sizes) w.i64(s);
  w.vec(p.flat());
}

MlpParamsd read_mlp(Reader& r) {
  MlpSpec spec;
  const auto n = r.count(8);
  for (std::size_t i = 0; i < n; ++i) spec.layer_sizes.push_back(r.i64());
  MlpParamsd p;
  try {
    p = MlpParamsd(spec);
  } catch (const ShapeError& e) {
    r.fail(e.what());
  }
  const auto flat = r.vec();
  if (flat.size() != p.size()) r.fail("network parameter count mismatch");
  p.flat() = flat;
  return p;
}

void write_adam(Writer& w, const AdamStated& a) {
  w.vec(a.m);
  w.vec(a.v);
  w.i64(a.step);
  w.f64(a.beta1);
  w.f64(a.beta2);
  w.f64(a.epsilon);
}

AdamStated read_adam(Reader& r) {
  AdamStated a;
  a.m = r.vec();
  a.v = r.vec();
  a.step = r.i64();
  a.beta1 = r.f64();
  a.beta2 = r.f64();
  a.epsilon = r.f64();
  if (a.m.size() != a.v.size()) r.fail("Adam moment sizes differ");
  return a;
}

void write_space(Writer& w, const DesignSpace& s) {
  w.u64(s.parameters().size());
  for (const auto& p : s.parameters()) {
    w.str(p.name);
    w.f64(p.lower);
    w.f64(p.upper);
  }
}

DesignSpace read_space(Reader& r) {
  std::vector<DesignParameter> ps(r.count(17));
  for (auto& p : ps) {
    p.name = r.str();
    p.lower = r.f64();
    p.upper = r.f64();
  }
  try {
    return DesignSpace(std::move(ps));
  } catch (const std::exception& e) {
    r.fail(e.what());
  }
}

void write_components(Writer& w, const std::vector<GmmComponent>& cs,
                      const std::vector<bool>& active) {
  w.u64(cs.size());
  for (const auto& c : cs) {
    w.vec(c.mean);
    w.vec(c.log_var);
  }
  w.flags(active);
}

void read_components(Reader& r, std::vector<GmmComponent>& cs, std::vector<bool>& active) {
  cs.resize(r.count(16));
  for (auto& c : cs) {
    c.mean = r.vec();
    c.log_var = r.vec();
  }
  active = r.flags();
  if (active.size() != cs.size()) r.fail("active flags do not match components");
}

std::string encode_policy(const PolicyState& p) {
  Writer w;
  write_mlp(w, p.actor);
  w.vec(p.log_std);
  write_mlp(w, p.critic);
  w.vec(p.design_lower);
  w.vec(p.design_upper);
  return w.take();
}

PolicyState decode_policy(std::string_view bytes) {
  Reader r(bytes, "policy");
  PolicyState p;
  p.actor = read_mlp(r);
  p.log_std = r.vec();
  p.critic = read_mlp(r);
  p.design_lower = r.vec();
  p.design_upper = r.vec();
  r.finish();
  try {
    p.validate();
  } catch (const std::exception& e) {
    r.fail(e.what());
  }
  return p;
}

std::string encode_runlog(const RunLog& log) {
  Writer w;
  w.u64(log.design_names.size());
  for (const auto& n : log.design_names) w.str(n);
  w.i64(log.num_components);
  w.u64(log.iterations.size());
  for (const auto& it : log.iterations) {
    w.i64(it.iteration);
    w.i64(it.timesteps);
    w.i64(it.eval_timesteps);
    w.f64(it.mean_return);
    w.f64(it.min_return);
    w.f64(it.max_return);
    w.i64(it.active_components);
    w.u8(it.design_updated);
    w.u8(it.pruned);
    w.u8(it.finalized);
    w.f64(it.approx_kl);
    w.f64(it.entropy);
    w.f64(it.value_loss);
    write_components(w, it.components, it.active);
  }
  w.u64(log.histograms.size());
  for (const auto& h : log.histograms) {
    w.i64(h.timesteps);
    w.mat(h.designs);
    w.vec(Eigen::Map<const Eigen::VectorXd>(h.returns.data(),
                                            static_cast<Eigen::Index>(h.returns.size())));
  }
  return w.take();
}

RunLog decode_runlog(std::string_view bytes) {
  Reader r(bytes, "runlog");
  RunLog log;
  log.design_names.resize(r.count(8));
  for (auto& n : log.design_names) n = r.str();
  log.num_components = static_cast<int>(r.i64());
  const auto iterations = r.count(1);
  for (std::size_t i = 0; i < iterations; ++i) {
    IterationRecord it;
    it.iteration = r.i64();
    it.timesteps = r.i64();
    it.eval_timesteps = r.i64();
    it.mean_return = r.f64();
    it.min_return = r.f64();
    it.max_return = r.f64();
    it.active_components = static_cast<int>(r.i64());
    it.design_updated = r.u8() != 0;
    it.pruned = r.u8() != 0;
    it.finalized = r.u8() != 0;
    it.approx_kl = r.f64();
    it.entropy = r.f64();
    it.value_loss = r.f64();
    read_components(r, it.components, it.active);
    log.iterations.push_back(std::move(it));
  }
  const auto histograms = r.count(1);
  for (std::size_t i = 0; i < histograms; ++i) {
    HistogramRecord h;
    h.timesteps = r.i64();
    h.designs = r.mat();
    const auto ret = r.vec();
    h.returns.assign(ret.begin(), ret.end());
    if (static_cast<Eigen::Index>(h.returns.size()) != h.designs.cols())
      r.fail("histogram returns do not match designs");
    log.histograms.push_back(std::move(h));
  }
  r.finish();
  return log;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_sections(const CheckpointSections& sections) {
  std::uint64_t table_size = 0;
  for (const auto& [name, _] : sections) table_size += 4 + name.size() + 24;
  const std::uint64_t header = kMagic.size() + 8;
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  std::uint64_t offset = header + table_size;
  for (const auto& [name, payload] : sections) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    for (char c : name) w.u8(static_cast<std::uint8_t>(c));
    w.u64(offset);
    w.u64(payload.size());
    w.u64(fnv1a64(payload));
    offset += payload.size();
  }
  std::string out = w.take();
  for (const auto& [_, payload] : sections) out += payload;
  return out;
}

CheckpointSections decode_sections(std::string_view bytes) {
  Reader r(bytes, "header");
  std::string magic;
  for (std::size_t i = 0; i < kMagic.size(); ++i) magic += static_cast<char>(r.u8());
  if (magic != kMagic) throw LoadError("not a checkpoint file (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw LoadError("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.u32();
  CheckpointSections out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.u32();
    std::string name;
    for (std::uint32_t k = 0; k < len; ++k) name += static_cast<char>(r.u8());
    const auto offset = r.u64();
    const auto size = r.u64();
    const auto checksum = r.u64();
    if (offset > bytes.size() || size > bytes.size() - offset)
      throw LoadError("checkpoint truncated in section '" + name + "'");
    const auto payload = bytes.substr(offset, size);
    if (fnv1a64(payload) != checksum)
      throw LoadError("checksum mismatch in section '" + name + "'");
    out.emplace(std::move(name), std::string(payload));
  }
  return out;
}

std::string serialize_joint_state(const JointState& s) {
  CheckpointSections sec;
  sec["config"] = s.config_text;
  {
    Writer w;
    w.i64(s.iteration);
    w.i64(s.timesteps);
    w.i64(s.eval_timesteps);
    w.u8(s.finalized);
    w.vec(s.omega_star);
    sec["schedule"] = w.take();
  }
  sec["policy"] = encode_policy(s.policy);
  {
    Writer w;
    write_adam(w, s.optimizer.actor);
    write_adam(w, s.optimizer.critic);
    sec["optimizer"] = w.take();
  }
  {
    Writer w;
    write_space(w, s.gmm.space);
    write_components(w, s.gmm.components, s.gmm.active);
    sec["gmm"] = w.take();
  }
  sec["runlog"] = encode_runlog(s.log);
  {
    // Every random stream is derived from the root seed and the iteration
    // index, so these two values are the complete generator state.
    Writer w;
    w.u64(parse_config(s.config_text).seed);
    w.i64(s.iteration);
    sec["rng"] = w.take();
  }
  return encode_sections(sec);
}

JointState deserialize_joint_state(std::string_view bytes) {
  const auto sec = decode_sections(bytes);
  auto get = [&](const char* name) -> std::string_view {
    const auto it = sec.find(name);
    if (it == sec.end()) throw LoadError(std::string("checkpoint lacks section '") + name + "'");
    return it->second;
  };
  JointState s;
  s.config_text = std::string(get("config"));
  std::uint64_t seed = 0;
  try {
    seed = parse_config(s.config_text).seed;
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint config invalid: ") + e.what());
  }
  {
    Reader r(get("schedule"), "schedule");
    s.iteration = r.i64();
    s.timesteps = r.i64();
    s.eval_timesteps = r.i64();
    s.finalized = r.u8() != 0;
    s.omega_star = r.vec();
    r.finish();
  }
  s.policy = decode_policy(get("policy"));
  {
    Reader r(get("optimizer"), "optimizer");
    s.optimizer.actor = read_adam(r);
    s.optimizer.critic = read_adam(r);
    r.finish();
    if (s.optimizer.actor.m.size() != s.policy.actor.size() + s.policy.action_dim() ||
        s.optimizer.critic.m.size() != s.policy.critic.size())
      r.fail("optimizer state does not match the policy");
  }
  {
    Reader r(get("gmm"), "gmm");
    s.gmm.space = read_space(r);
    read_components(r, s.gmm.components, s.gmm.active);
    r.finish();
    try {
      s.gmm.validate();
    } catch (const std::exception& e) {
      r.fail(e.what());
    }
  }
  s.log = decode_runlog(get("runlog"));
  {
    Reader r(get("rng"), "rng");
    if (r.u64() != seed) r.fail("seed does not match the config");
    if (r.i64() != s.iteration) r.fail("iteration does not match the schedule");
    r.finish();
  }
  return s;
}

void save_checkpoint(const std::string& path, const JointState& state) {
  const auto bytes = serialize_joint_state(state);
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

JointState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_joint_state(ss.str());
}

}  // namespace nlimb
