#include "satrf/model_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "satrf/error.hpp"

namespace satrf {

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

void put_vector(std::ostream& out, const char* tag, const std::vector<double>& v) {
  out << tag << ' ' << v.size();
  for (double x : v) {
    out << ' ';
    put(out, x);
  }
  out << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next non-empty line, split into its leading tag and the remainder.
  std::pair<std::string, std::istringstream> next() {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_no_;
      if (!text.empty() && text.back() == '\r') text.pop_back();
      if (!text.empty()) {
        std::istringstream s(text);
        std::string tag;
        s >> tag;
        return {tag, std::move(s)};
      }
    }
    fail("unexpected end of file");
  }

  std::istringstream expect(const std::string& tag) {
    auto [found, s] = next();
    if (found != tag) fail("expected '" + tag + "', found '" + found + "'");
    return std::move(s);
  }

  template <typename T>
  T value(std::istringstream& s) {
    std::string tok;
    if (!(s >> tok)) fail("missing value");
    T v{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) fail("bad number '" + tok + "'");
    return v;
  }

  std::string word(std::istringstream& s) {
    std::string tok;
    if (!(s >> tok)) fail("missing value");
    return tok;
  }

  std::vector<double> vector(const std::string& tag) {
    auto s = expect(tag);
    const auto n = value<std::size_t>(s);
    std::vector<double> v(n);
    for (auto& x : v) x = value<double>(s);
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError("model file line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

void write_header(std::ostream& out, const char* kind) { out << kind << ' ' << kModelFormatVersion << '\n'; }

void read_header(Reader& r, const std::string& kind) {
  auto s = r.expect(kind);
  const int version = r.value<int>(s);
  if (version != kModelFormatVersion) r.fail("unsupported format version " + std::to_string(version));
}

void write_forest_body(const Forest& f, std::ostream& out) {
  const auto& p = f.params;
  out << "forest " << to_string(p.kind) << ' ' << f.trees.size() << ' ' << f.num_features << ' ' << p.min_leaf
      << ' ' << p.max_depth << ' ' << p.max_features << ' ' << p.bootstrap << ' ' << p.seed << '\n';
  for (const auto& t : f.trees) {
    out << "tree " << t.nodes.size() << ' ' << t.leaves.size() << '\n';
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        out << "leafnode " << n.leaf << '\n';
      } else {
        out << "split " << n.feature << ' ';
        put(out, n.threshold);
        out << ' ' << n.left << ' ' << n.right << '\n';
      }
    }
    for (const auto& l : t.leaves) {
      out << "leaf " << l.count << ' ';
      put(out, l.mean_target);
      for (double a : l.mean_features) {
        out << ' ';
        put(out, a);
      }
      out << '\n';
    }
  }
}

Forest read_forest_body(Reader& r) {
  auto s = r.expect("forest");
  Forest f;
  f.params.kind = parse_forest_kind(r.word(s));
  const auto T = r.value<std::size_t>(s);
  f.num_features = r.value<std::size_t>(s);
  f.params.min_leaf = r.value<std::size_t>(s);
  f.params.max_depth = r.value<std::size_t>(s);
  f.params.max_features = r.value<std::size_t>(s);
  f.params.bootstrap = r.value<int>(s);
  f.params.seed = r.value<std::uint64_t>(s);
  f.params.num_trees = T;
  if (T == 0 || f.num_features == 0) r.fail("empty forest");
  f.trees.resize(T);
  for (auto& t : f.trees) {
    auto ts = r.expect("tree");
    const auto node_count = r.value<std::size_t>(ts);
    const auto leaf_count = r.value<std::size_t>(ts);
    if (node_count == 0 || leaf_count == 0) r.fail("empty tree");
    t.nodes.resize(node_count);
    for (auto& n : t.nodes) {
      auto [tag, ns] = r.next();
      if (tag == "leafnode") {
        n.leaf = r.value<std::uint32_t>(ns);
        if (n.leaf >= leaf_count) r.fail("leaf index out of range");
      } else if (tag == "split") {
        n.feature = r.value<std::uint32_t>(ns);
        n.threshold = r.value<double>(ns);
        n.left = r.value<std::uint32_t>(ns);
        n.right = r.value<std::uint32_t>(ns);
        if (n.feature >= f.num_features || n.left >= node_count || n.right >= node_count) {
          r.fail("split node references out of range");
        }
      } else {
        r.fail("expected node, found '" + tag + "'");
      }
    }
    t.leaves.resize(leaf_count);
    for (auto& l : t.leaves) {
      auto ls = r.expect("leaf");
      l.count = r.value<std::size_t>(ls);
      l.mean_target = r.value<double>(ls);
      l.mean_features.resize(f.num_features);
      for (auto& a : l.mean_features) a = r.value<double>(ls);
    }
  }
  return f;
}

}  // namespace

void write_forest(const Forest& forest, std::ostream& out) {
  write_header(out, "satrf-forest");
  write_forest_body(forest, out);
  out << "end\n";
}

Forest read_forest(std::istream& in) {
  Reader r(in);
  read_header(r, "satrf-forest");
  Forest f = read_forest_body(r);
  r.expect("end");
  return f;
}

void write_model(const SatRfModel& model, std::ostream& out) {
  write_header(out, "satrf-model");
  const auto& c = model.config;
  out << "config ";
  put(out, c.epsilon);
  out << ' ';
  put(out, c.gamma);
  out << ' ';
  put(out, c.tau);
  out << ' ';
  put(out, c.kappa);
  out << ' ' << to_string(c.variant) << ' ' << to_string(c.loss) << '\n';
  put_vector(out, "w", model.w);
  put_vector(out, "v", model.v);
  if (model.input_scaling) {
    put_vector(out, "scale_mean", model.input_scaling->mean);
    put_vector(out, "scale_sd", model.input_scaling->scale);
  } else {
    out << "noscale\n";
  }
  write_forest_body(model.forest, out);
  out << "end\n";
}

SatRfModel read_model(std::istream& in) {
  Reader r(in);
  read_header(r, "satrf-model");
  SatRfModel m;
  auto cs = r.expect("config");
  m.config.epsilon = r.value<double>(cs);
  m.config.gamma = r.value<double>(cs);
  m.config.tau = r.value<double>(cs);
  m.config.kappa = r.value<double>(cs);
  m.config.variant = parse_variant(r.word(cs));
  m.config.loss = parse_loss(r.word(cs));
  m.config.validate();
  m.w = r.vector("w");
  m.v = r.vector("v");
  auto [tag, ss] = r.next();
  if (tag == "scale_mean") {
    Standardizer z;
    const auto n = r.value<std::size_t>(ss);
    z.mean.resize(n);
    for (auto& x : z.mean) x = r.value<double>(ss);
    z.scale = r.vector("scale_sd");
    if (z.scale.size() != z.mean.size()) r.fail("scaling vectors differ in length");
    m.input_scaling = std::move(z);
  } else if (tag != "noscale") {
    r.fail("expected scaling block, found '" + tag + "'");
  }
  m.forest = read_forest_body(r);
  r.expect("end");
  if (m.w.size() != m.forest.size() || m.v.size() != m.forest.size()) r.fail("weight length != tree count");
  if (m.input_scaling && m.input_scaling->mean.size() != m.forest.num_features) {
    r.fail("scaling length != feature count");
  }
  return m;
}

void save_model(const SatRfModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_model(model, out);
  if (!out) throw DataError("failed writing " + path.string());
}

SatRfModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_model(in);
}

}  // namespace satrf
