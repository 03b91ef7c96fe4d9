// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <map>

#include "tivgan/curriculum/curriculum.hpp"
#include "tivgan/errors.hpp"
#include "tivgan/util/serialize.hpp"

namespace tivgan::curriculum {

namespace {

constexpr char kMagic[4] = {'T', 'I', 'V', 'G'};

std::uint32_t tag(const char (&s)[5]) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}

const std::uint32_t kConfig = tag("CONF");
const std::uint32_t kState = tag("STAT");
const std::uint32_t kRng = tag("RNG ");
const std::uint32_t kParams = tag("PARM");
const std::uint32_t kPca = tag("PCA ");
const std::uint32_t kOptim = tag("OPTM");

void put_shape(ByteWriter& w, const nn::Shape& s) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
  for (auto d : s) w.put<std::int64_t>(d);
}

nn::Shape get_shape(ByteReader& r) {
  const auto rank = r.get<std::uint32_t>();
  if (rank > 8) throw FormatError("checkpoint: tensor rank " + std::to_string(rank) + " is implausible");
  nn::Shape s(rank);
  for (auto& d : s) {
    d = r.get<std::int64_t>();
    if (d <= 0 || d > (1LL << 32)) throw FormatError("checkpoint: bad tensor dim " + std::to_string(d));
  }
  return s;
}

void put_tensor(ByteWriter& w, const nn::Tensor<float>& t) {
  put_shape(w, t.shape());
  w.put_array(t.data(), static_cast<std::size_t>(t.numel()));
}

nn::Tensor<float> get_tensor(ByteReader& r) {
  auto shape = get_shape(r);
  const auto n = nn::shape_numel(shape);
  if (static_cast<std::size_t>(n) * sizeof(float) > r.remaining()) throw FormatError("checkpoint: truncated tensor");
  nn::Tensor<float> t(std::move(shape));
  for (auto& v : t.values()) v = r.get<float>();
  return t;
}

void put_eigen(ByteWriter& w, const Eigen::MatrixXd& m) {
  w.put<std::int64_t>(m.rows());
  w.put<std::int64_t>(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.put<double>(m(i, j));
}

Eigen::MatrixXd get_eigen(ByteReader& r) {
  const auto rows = r.get<std::int64_t>();
  const auto cols = r.get<std::int64_t>();
  if (rows < 0 || cols < 0 || static_cast<std::uint64_t>(rows * cols) * sizeof(double) > r.remaining())
    throw FormatError("checkpoint: bad matrix size");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.get<double>();
  return m;
}

void put_adam(ByteWriter& w, const nn::Adam<float>& a) {
  const auto& c = a.config();
  w.put<double>(c.learning_rate);
  w.put<double>(c.beta1);
  w.put<double>(c.beta2);
  w.put<double>(c.epsilon);
  w.put<std::int64_t>(a.step_count());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(a.moments().size()));
  for (const auto& [id, m] : a.moments()) {
    w.put<std::uint64_t>(id);
    put_tensor(w, m.first);
    put_tensor(w, m.second);
  }
}

nn::Adam<float> get_adam(ByteReader& r) {
  nn::AdamConfig c;
  c.learning_rate = r.get<double>();
  c.beta1 = r.get<double>();
  c.beta2 = r.get<double>();
  c.epsilon = r.get<double>();
  const auto steps = r.get<std::int64_t>();
  const auto count = r.get<std::uint32_t>();
  std::map<std::uint64_t, nn::Adam<float>::Moments> moments;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto id = r.get<std::uint64_t>();
    auto first = get_tensor(r);
    auto second = get_tensor(r);
    if (first.shape() != second.shape()) throw FormatError("checkpoint: optimizer moment shapes differ");
    moments.emplace(id, nn::Adam<float>::Moments{std::move(first), std::move(second)});
  }
  nn::Adam<float> a(c);
  a.restore(c, steps, std::move(moments));
  return a;
}

void put_section(ByteWriter& out, std::uint32_t id, const ByteWriter& body) {
  out.put<std::uint32_t>(id);
  out.put<std::uint64_t>(body.size());
  out.put_bytes(body.bytes().data(), body.size());
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const CurriculumState& st) {
  ByteWriter out;
  out.put_bytes(kMagic, 4);
  out.put<std::uint32_t>(kCheckpointVersion);

  ByteWriter conf;
  conf.put_string(st.config.to_kv().dump());
  put_section(out, kConfig, conf);

  ByteWriter state;
  state.put<std::int32_t>(st.stage);
  state.put<std::int64_t>(st.stage_iteration);
  state.put<std::int64_t>(st.global_iteration);
  state.put<std::int32_t>(st.models.step_disc ? st.models.step_disc->step : 0);
  state.put<std::uint64_t>(st.models.ids.peek());
  state.put<std::uint64_t>(st.metrics_offset);
  put_section(out, kState, state);

  ByteWriter rng;
  rng.put_string(st.rng.state());
  put_section(out, kRng, rng);

  ByteWriter params;
  auto& models = const_cast<models::ModelSet<float>&>(st.models);
  const auto all = models.all_params();
  params.put<std::uint32_t>(static_cast<std::uint32_t>(all.size()));
  for (const auto* p : all) {
    params.put<std::uint64_t>(p->id);
    params.put_string(p->name);
    params.put<std::uint8_t>(4);  // float32 payload
    put_tensor(params, p->value);
  }
  put_section(out, kParams, params);

  ByteWriter pca;
  put_eigen(pca, st.pca.mean);
  put_eigen(pca, st.pca.components);
  put_eigen(pca, st.pca.explained_variance);
  put_section(out, kPca, pca);

  ByteWriter optim;
  put_adam(optim, st.opt_g);
  put_adam(optim, st.opt_image);
  put_adam(optim, st.opt_step);
  put_section(out, kOptim, optim);
  return out.take();
}

CurriculumState deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  ByteReader r(bytes.data(), bytes.size(), origin);
  char magic[4];
  r.get_bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError(origin + ": not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError(origin + ": checkpoint version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));

  std::map<std::uint32_t, ByteReader> sections;
  while (!r.done()) {
    const auto id = r.get<std::uint32_t>();
    const auto len = r.get<std::uint64_t>();
    if (len > r.remaining()) throw FormatError(origin + ": truncated section");
    sections.insert_or_assign(id, r.sub(static_cast<std::size_t>(len), origin));
  }
  auto section = [&](std::uint32_t id, const char* name) -> ByteReader& {
    auto it = sections.find(id);
    if (it == sections.end()) throw FormatError(origin + ": missing section " + name);
    return it->second;
  };

  CurriculumState st;
  st.config = CurriculumConfig::from_kv(KeyValues::parse(section(kConfig, "config").get_string(), origin));
  st.config.validate();

  auto& sr = section(kState, "state");
  st.stage = sr.get<std::int32_t>();
  st.stage_iteration = sr.get<std::int64_t>();
  st.global_iteration = sr.get<std::int64_t>();
  const int step_disc = sr.get<std::int32_t>();
  const auto next_id = sr.get<std::uint64_t>();
  st.metrics_offset = sr.get<std::uint64_t>();
  if (st.stage < 0 || st.stage > st.config.n || step_disc < 0 || step_disc > st.config.n)
    throw FormatError(origin + ": stage out of range");

  st.rng.restore(section(kRng, "rng").get_string());

  // Rebuild the structure, then overwrite values and ids.
  Rng scratch(0);
  st.models = models::ModelSet<float>(st.config.arch, scratch);
  if (step_disc > 0) st.models.step_disc = models::fresh_step_discriminator<float>(st.config.arch, step_disc, st.models.ids, scratch);
  auto& pr = section(kParams, "params");
  const auto count = pr.get<std::uint32_t>();
  const auto all = st.models.all_params();
  if (count != all.size())
    throw FormatError(origin + ": " + std::to_string(count) + " parameters stored, model has " + std::to_string(all.size()));
  for (auto* p : all) {
    const auto id = pr.get<std::uint64_t>();
    const auto name = pr.get_string();
    if (pr.get<std::uint8_t>() != 4) throw FormatError(origin + ": unsupported parameter dtype");
    auto value = get_tensor(pr);
    if (name != p->name || value.shape() != p->value.shape())
      throw FormatError(origin + ": parameter " + name + " " + nn::shape_string(value.shape()) + " does not match " +
                        p->name + " " + nn::shape_string(p->value.shape()));
    p->id = id;
    p->value = std::move(value);
  }
  st.models.ids.reset(next_id);

  auto& pc = section(kPca, "pca");
  st.pca.mean = get_eigen(pc);
  st.pca.components = get_eigen(pc);
  st.pca.explained_variance = get_eigen(pc);
  if (st.pca.components.cols() != st.pca.mean.size() || st.pca.components.rows() != st.config.arch.text_dim)
    throw FormatError(origin + ": PCA shape does not match the config");

  auto& op = section(kOptim, "optimizer");
  st.opt_g = get_adam(op);
  st.opt_image = get_adam(op);
  st.opt_step = get_adam(op);
  return st;
}

void save_checkpoint(const CurriculumState& st, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(st);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CurriculumState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path.string());
}

std::uint64_t parameter_checksum(const std::vector<nn::Parameter<float>*>& params) {
  auto sorted = params;
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto* p : sorted) {
    mix(&p->id, sizeof(p->id));
    mix(p->value.data(), static_cast<std::size_t>(p->value.numel()) * sizeof(float));
  }
  return h;
}

}  // namespace tivgan::curriculum
