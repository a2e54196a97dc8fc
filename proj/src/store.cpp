#include "countcos/store.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>

#include "countcos/diagnostics.hpp"
#include "countcos/errors.hpp"
#include "countcos/geojson.hpp"
#include "countcos/hash.hpp"

namespace countcos::store {

static_assert(std::endian::native == std::endian::little, "store I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic{'C', 'C', 'O', 'S', 'D', 'R', 'A', 'W'};

class Writer {
 public:
  template <class T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void str(const std::string& s) {
    u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void strings(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }
  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    raw(v.data(), static_cast<std::size_t>(v.size()));
  }
  void mat(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    raw(m.data(), static_cast<std::size_t>(m.size()));
  }
  template <class Sparse>
  void sparse(const Sparse& s) {
    u64(static_cast<std::uint64_t>(s.rows()));
    u64(static_cast<std::uint64_t>(s.cols()));
    u64(static_cast<std::uint64_t>(s.nonZeros()));
    for (Eigen::Index o = 0; o < s.outerSize(); ++o) {
      for (typename Sparse::InnerIterator it(s, o); it; ++it) {
        u64(static_cast<std::uint64_t>(it.row()));
        u64(static_cast<std::uint64_t>(it.col()));
        f64(it.value());
      }
    }
  }
  void raw(const double* p, std::size_t n) {
    const auto* c = reinterpret_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n * sizeof(double));
  }
  [[nodiscard]] const std::vector<char>& bytes() const noexcept { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size, std::string section) : p_(data), end_(data + size), section_(std::move(section)) {}

  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p_, sizeof(T));
    p_ += sizeof(T);
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::size_t count(std::size_t elem_size) {
    const std::uint64_t n = u64();
    if (elem_size > 0 && n > static_cast<std::uint64_t>(end_ - p_) / elem_size) fail();
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s(p_, n);
    p_ += n;
    return s;
  }
  std::vector<std::string> strings() {
    const std::size_t n = count(8);
    std::vector<std::string> v;
    v.reserve(n);
    for (std::size_t k = 0; k < n; ++k) v.push_back(str());
    return v;
  }
  Eigen::VectorXd vec() {
    const std::size_t n = count(sizeof(double));
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    raw(v.data(), n);
    return v;
  }
  Eigen::MatrixXd mat() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    if (cols != 0 && rows > static_cast<std::uint64_t>(end_ - p_) / sizeof(double) / cols) fail();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    raw(m.data(), static_cast<std::size_t>(rows * cols));
    return m;
  }
  template <class Sparse>
  Sparse sparse() {
    const auto rows = static_cast<Eigen::Index>(u64());
    const auto cols = static_cast<Eigen::Index>(u64());
    const std::size_t nnz = count(24);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
      const auto i = static_cast<Eigen::Index>(u64());
      const auto j = static_cast<Eigen::Index>(u64());
      const double v = f64();
      if (i < 0 || i >= rows || j < 0 || j >= cols) fail();
      triplets.emplace_back(i, j, v);
    }
    Sparse s(rows, cols);
    s.setFromTriplets(triplets.begin(), triplets.end());
    return s;
  }
  void raw(double* out, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(out, p_, n * sizeof(double));
    p_ += n * sizeof(double);
  }
  void finish() const {
    if (p_ != end_) fail();
  }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) fail();
  }
  [[noreturn]] void fail() const { throw DataError("draw store section " + section_ + " is malformed"); }

  const char* p_;
  const char* end_;
  std::string section_;
};

void write_section(std::ofstream& out, const char (&tag)[5], const Writer& w) {
  const auto& bytes = w.bytes();
  out.write(tag, 4);
  const std::uint64_t len = bytes.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  const std::uint64_t sum = fnv1a(bytes.data(), bytes.size());
  out.write(reinterpret_cast<const char*>(&sum), sizeof(sum));
}

void write_state(Writer& w, const model::ModelState& s) {
  w.vec(s.beta);
  w.vec(s.eta);
  w.vec(s.xi);
  w.f64(s.a);
  w.f64(s.b);
  w.f64(s.phi);
  w.vec(s.sigma2_eps);
  w.f64(s.sigma2_gamma);
}

model::ModelState read_state(Reader& r) {
  model::ModelState s;
  s.beta = r.vec();
  s.eta = r.vec();
  s.xi = r.vec();
  s.a = r.f64();
  s.b = r.f64();
  s.phi = r.f64();
  s.sigma2_eps = r.vec();
  s.sigma2_gamma = r.f64();
  return s;
}

// Opened store with a section directory; payloads are read on demand.
class StoreFile {
 public:
  explicit StoreFile(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open draw store " + path.string());
    std::array<char, 8> magic{};
    in_.read(magic.data(), magic.size());
    if (!in_ || magic != kMagic) throw DataError(path.string() + " is not a draw store");
    read_pod(header_.version);
    if (header_.version != kStoreVersion) {
      throw DataError("draw store version " + std::to_string(header_.version) + " is not supported");
    }
    for (std::uint64_t* f : {&header_.timestamp, &header_.config_fingerprint, &header_.geometry_checksum, &header_.n1,
                             &header_.r, &header_.p, &header_.K}) {
      read_pod(*f);
    }
    while (true) {
      char tag[4];
      in_.read(tag, 4);
      if (in_.gcount() == 0) break;
      std::uint64_t len = 0;
      if (in_.gcount() != 4) throw DataError("draw store is truncated");
      read_pod(len);
      const auto offset = static_cast<std::uint64_t>(in_.tellg());
      directory_.push_back({std::string(tag, 4), offset, len});
      in_.seekg(static_cast<std::streamoff>(len + sizeof(std::uint64_t)), std::ios::cur);
      if (!in_) throw DataError("draw store is truncated");
    }
    in_.clear();
  }

  [[nodiscard]] const StoreHeader& header() const noexcept { return header_; }

  std::vector<char> payload(const std::string& tag) {
    for (const auto& e : directory_) {
      if (e.tag != tag) continue;
      std::vector<char> bytes(e.length);
      in_.seekg(static_cast<std::streamoff>(e.offset));
      in_.read(bytes.data(), static_cast<std::streamsize>(e.length));
      std::uint64_t sum = 0;
      read_pod(sum);
      if (!in_) throw DataError("draw store is truncated in section " + tag);
      if (sum != fnv1a(bytes.data(), bytes.size())) throw DataError("checksum mismatch in draw store section " + tag);
      return bytes;
    }
    throw DataError("draw store has no " + tag + " section");
  }

 private:
  struct Entry {
    std::string tag;
    std::uint64_t offset;
    std::uint64_t length;
  };
  template <class T>
  void read_pod(T& v) {
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw DataError("draw store " + path_.string() + " is truncated");
  }

  std::filesystem::path path_;
  std::ifstream in_;
  StoreHeader header_;
  std::vector<Entry> directory_;
};

geometry::ArealSupport read_geometry(StoreFile& file) {
  const auto bytes = file.payload("GEOM");
  Reader r(bytes.data(), bytes.size(), "GEOM");
  const auto text = r.str();
  r.finish();
  geometry::ArealSupport source = geometry::parse_geojson(text, 1);
  if (source.checksum() != file.header().geometry_checksum) {
    throw DataError("draw store geometry does not match its recorded checksum");
  }
  return source;
}

inference::DrawMatrix read_mu1(StoreFile& file) {
  const auto bytes = file.payload("MU1_");
  Reader r(bytes.data(), bytes.size(), "MU1_");
  const auto K = static_cast<Eigen::Index>(r.u64());
  const auto n1 = static_cast<Eigen::Index>(r.u64());
  if (static_cast<std::uint64_t>(K) != file.header().K || static_cast<std::uint64_t>(n1) != file.header().n1 ||
      bytes.size() != 16 + static_cast<std::size_t>(K * n1) * sizeof(double)) {
    throw DataError("draw store MU1_ section disagrees with the header");
  }
  inference::DrawMatrix mu1(K, n1);
  r.raw(mu1.data(), static_cast<std::size_t>(K * n1));
  return mu1;
}

}  // namespace

model::SurveyDataset DrawStore::dataset() const { return model::SurveyDataset(source.size(), levels); }

void write_store(const std::filesystem::path& path, const DrawStore& store, std::uint64_t timestamp) {
  const auto& d = store.draws;
  StoreHeader h;
  h.timestamp = timestamp;
  h.config_fingerprint = d.config_fingerprint;
  h.geometry_checksum = store.source.checksum();
  h.n1 = store.source.size();
  h.r = store.basis.rank();
  h.p = store.covariates.cols();
  h.K = d.size();
  if (static_cast<std::uint64_t>(d.mu1.rows()) != h.K || static_cast<std::uint64_t>(d.mu1.cols()) != h.n1) {
    throw DataError("posterior draws do not match the source support");
  }

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write draw store " + tmp.string());
    out.write(kMagic.data(), kMagic.size());
    out.write(reinterpret_cast<const char*>(&h.version), sizeof(h.version));
    for (std::uint64_t f : {h.timestamp, h.config_fingerprint, h.geometry_checksum, h.n1, h.r, h.p, h.K}) {
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }

    Writer geom;
    geom.str(geometry::to_geojson(store.source));
    write_section(out, "GEOM", geom);

    Writer modl;
    modl.str(model::to_string(store.kind));
    const auto& hp = store.hyper;
    modl.vec(hp.mu_beta);
    for (double v : {hp.sigma2_beta, hp.alpha_phi, hp.omega_phi, hp.mu_Phi(0), hp.mu_Phi(1), hp.sigma2_Phi,
                     hp.alpha_eps, hp.omega_eps, hp.alpha_gamma, hp.omega_gamma}) {
      modl.f64(v);
    }
    modl.u64(d.seed);
    modl.u64(d.chains);
    write_section(out, "MODL", modl);

    Writer bass;
    bass.mat(store.covariates.X);
    bass.strings(store.covariates.labels);
    const auto& b = store.basis;
    bass.mat(b.Psi);
    bass.vec(b.eigenvalues);
    bass.u64(b.n_positive);
    bass.sparse(b.Q);
    bass.mat(b.PhiQ);
    bass.vec(b.LambdaQ);
    bass.vec(Eigen::Map<const Eigen::VectorXd>(b.g_angles.data(), static_cast<Eigen::Index>(b.g_angles.size())));
    write_section(out, "BASS", bass);

    Writer data;
    data.u64(store.levels.size());
    for (const auto& l : store.levels) {
      data.u64(static_cast<std::uint64_t>(l.level));
      data.strings(l.ids);
      data.vec(l.counts);
      data.vec(l.variances);
      data.sparse(l.weights);
    }
    write_section(out, "DATA", data);

    Writer draw;
    draw.u64(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      draw.u64(d.chain_of[k]);
      write_state(draw, d.states[k]);
    }
    write_section(out, "DRAW", draw);

    Writer mu;
    mu.u64(static_cast<std::uint64_t>(d.mu1.rows()));
    mu.u64(static_cast<std::uint64_t>(d.mu1.cols()));
    mu.raw(d.mu1.data(), static_cast<std::size_t>(d.mu1.size()));
    write_section(out, "MU1_", mu);

    Writer acpt;
    acpt.u64(d.acceptance.size());
    for (const auto& s : d.acceptance) {
      acpt.str(s.name);
      acpt.u64(s.proposed);
      acpt.u64(s.accepted);
      acpt.f64(s.scale);
    }
    acpt.strings(d.warnings);
    write_section(out, "ACPT", acpt);

    out.flush();
    if (!out) throw DataError("failed writing draw store " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

StoreHeader read_header(const std::filesystem::path& path) { return StoreFile(path).header(); }

CosView read_cos_view(const std::filesystem::path& path) {
  StoreFile file(path);
  CosView view;
  view.header = file.header();
  view.source = read_geometry(file);
  view.mu1 = read_mu1(file);
  return view;
}

DrawStore read_store(const std::filesystem::path& path) {
  StoreFile file(path);
  DrawStore s;
  s.header = file.header();
  s.source = read_geometry(file);

  {
    const auto bytes = file.payload("MODL");
    Reader r(bytes.data(), bytes.size(), "MODL");
    s.kind = model::parse_model_kind(r.str());
    auto& hp = s.hyper;
    hp.mu_beta = r.vec();
    for (double* v : {&hp.sigma2_beta, &hp.alpha_phi, &hp.omega_phi, &hp.mu_Phi(0), &hp.mu_Phi(1), &hp.sigma2_Phi,
                      &hp.alpha_eps, &hp.omega_eps, &hp.alpha_gamma, &hp.omega_gamma}) {
      *v = r.f64();
    }
    s.draws.seed = r.u64();
    s.draws.chains = static_cast<std::size_t>(r.u64());
    r.finish();
  }
  {
    const auto bytes = file.payload("BASS");
    Reader r(bytes.data(), bytes.size(), "BASS");
    s.covariates.X = r.mat();
    s.covariates.labels = r.strings();
    auto& b = s.basis;
    b.Psi = r.mat();
    b.eigenvalues = r.vec();
    b.n_positive = static_cast<std::size_t>(r.u64());
    b.Q = r.sparse<Eigen::SparseMatrix<double>>();
    b.PhiQ = r.mat();
    b.LambdaQ = r.vec();
    const Eigen::VectorXd g = r.vec();
    b.g_angles.assign(g.data(), g.data() + g.size());
    r.finish();
  }
  {
    const auto bytes = file.payload("DATA");
    Reader r(bytes.data(), bytes.size(), "DATA");
    const std::size_t n_levels = r.count(8);
    for (std::size_t l = 0; l < n_levels; ++l) {
      model::SupportData sd;
      sd.level = static_cast<int>(r.u64());
      sd.ids = r.strings();
      sd.counts = r.vec();
      sd.variances = r.vec();
      sd.weights = r.sparse<Eigen::SparseMatrix<double, Eigen::RowMajor>>();
      s.levels.push_back(std::move(sd));
    }
    r.finish();
  }
  {
    const auto bytes = file.payload("DRAW");
    Reader r(bytes.data(), bytes.size(), "DRAW");
    const std::size_t K = r.count(8);
    s.draws.states.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      s.draws.chain_of.push_back(static_cast<std::uint32_t>(r.u64()));
      s.draws.states.push_back(read_state(r));
    }
    r.finish();
    if (K != s.header.K) throw DataError("draw store DRAW section disagrees with the header");
  }
  s.draws.mu1 = read_mu1(file);
  {
    const auto bytes = file.payload("ACPT");
    Reader r(bytes.data(), bytes.size(), "ACPT");
    const std::size_t n = r.count(8);
    for (std::size_t k = 0; k < n; ++k) {
      sampler::BlockStats st;
      st.name = r.str();
      st.proposed = static_cast<std::size_t>(r.u64());
      st.accepted = static_cast<std::size_t>(r.u64());
      st.scale = r.f64();
      s.draws.acceptance.push_back(std::move(st));
    }
    s.draws.warnings = r.strings();
    r.finish();
  }
  s.draws.config_fingerprint = s.header.config_fingerprint;
  return s;
}

void write_trace_csv(std::ostream& out, const sampler::PosteriorDraws& draws, bool gap) {
  const auto names = sampler::monitored_names(draws, gap);
  const auto traces = sampler::monitored_traces(draws, gap);
  out << "draw,chain";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  out.precision(17);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    out << k << ',' << draws.chain_of[k];
    for (const auto& t : traces) out << ',' << t[k];
    out << '\n';
  }
}

}  // namespace countcos::store
