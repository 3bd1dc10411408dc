#include "mcflab/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "mcflab/error.hpp"

namespace mcflab {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

struct Line {
  int number;
  std::vector<std::string_view> tokens;
  std::string comment;  // text after '#', trimmed
};

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

class LineReader {
public:
  explicit LineReader(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) storage_.push_back(line);
    lines_.reserve(storage_.size());
    for (std::size_t n = 0; n < storage_.size(); ++n) {
      std::string_view view = storage_[n];
      Line l{static_cast<int>(n) + 1, {}, {}};
      const auto hash = view.find('#');
      if (hash != std::string_view::npos) {
        std::string_view c = view.substr(hash + 1);
        while (!c.empty() && std::isspace(static_cast<unsigned char>(c.front()))) c.remove_prefix(1);
        while (!c.empty() && std::isspace(static_cast<unsigned char>(c.back()))) c.remove_suffix(1);
        l.comment = std::string(c);
        view = view.substr(0, hash);
      }
      l.tokens = split(view);
      lines_.push_back(std::move(l));
    }
  }

  const std::vector<Line>& lines() const { return lines_; }

private:
  std::vector<std::string> storage_;
  std::vector<Line> lines_;
};

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

double to_double(std::string_view tok, int line) {
  double v = 0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto res = std::from_chars(first, tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    parse_fail(line, "expected a number, got '" + std::string(tok) + "'");
  }
  return v;
}

long to_int(std::string_view tok, int line) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    parse_fail(line, "expected an integer, got '" + std::string(tok) + "'");
  }
  return v;
}

std::optional<int> dim_from_comment(const std::string& comment, int line) {
  const auto tokens = split(comment);
  if (tokens.size() == 2 && tokens[0] == "dim") {
    const long d = to_int(tokens[1], line);
    if (d < 3) parse_fail(line, "#dim must be >= 3");
    return static_cast<int>(d);
  }
  return std::nullopt;
}

TriMesh finish(Points vertices, std::vector<Face> faces) {
  return TriMesh::closed(std::move(vertices), std::move(faces));
}

}  // namespace

TriMesh read_off(std::istream& in) {
  LineReader reader(in);
  int dim = 3;
  std::size_t idx = 0;
  const auto& lines = reader.lines();

  auto next_content = [&]() -> const Line& {
    while (idx < lines.size()) {
      const Line& l = lines[idx++];
      if (auto d = dim_from_comment(l.comment, l.number)) dim = *d;
      if (!l.tokens.empty()) return l;
    }
    parse_fail(static_cast<int>(lines.size()), "unexpected end of file");
  };

  const Line& header = next_content();
  std::vector<std::string_view> counts(header.tokens.begin(), header.tokens.end());
  if (counts.empty() || counts.front() != "OFF") parse_fail(header.number, "missing OFF header");
  counts.erase(counts.begin());
  int counts_line = header.number;
  if (counts.empty()) {
    const Line& c = next_content();
    counts.assign(c.tokens.begin(), c.tokens.end());
    counts_line = c.number;
  }
  if (counts.size() < 2) parse_fail(counts_line, "expected vertex and face counts");
  const long nv = to_int(counts[0], counts_line);
  const long nf = to_int(counts[1], counts_line);
  if (nv <= 0 || nf <= 0) parse_fail(counts_line, "counts must be positive");

  Points x(nv, dim);
  for (long i = 0; i < nv; ++i) {
    const Line& l = next_content();
    if (static_cast<int>(l.tokens.size()) != dim) {
      parse_fail(l.number, "vertex line has " + std::to_string(l.tokens.size()) +
                               " coordinates, expected " + std::to_string(dim));
    }
    for (int k = 0; k < dim; ++k) x(i, k) = to_double(l.tokens[k], l.number);
  }
  std::vector<Face> faces;
  faces.reserve(nf);
  for (long f = 0; f < nf; ++f) {
    const Line& l = next_content();
    if (l.tokens.size() < 4 || to_int(l.tokens[0], l.number) != 3) {
      parse_fail(l.number, "only triangular faces are supported");
    }
    faces.push_back({static_cast<int>(to_int(l.tokens[1], l.number)),
                     static_cast<int>(to_int(l.tokens[2], l.number)),
                     static_cast<int>(to_int(l.tokens[3], l.number))});
  }
  return finish(std::move(x), std::move(faces));
}

void write_off(std::ostream& out, const TriMesh& mesh) {
  out << "OFF\n";
  if (mesh.dim() != 3) out << "#dim " << mesh.dim() << '\n';
  out << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    for (int k = 0; k < mesh.dim(); ++k) {
      if (k) out << ' ';
      out << format_double(mesh.vertices()(i, k));
    }
    out << '\n';
  }
  for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

TriMesh read_obj(std::istream& in) {
  LineReader reader(in);
  std::optional<int> dim;
  std::vector<std::vector<double>> coords;
  std::vector<Face> faces;
  for (const Line& l : reader.lines()) {
    if (auto d = dim_from_comment(l.comment, l.number)) dim = *d;
    if (l.tokens.empty()) continue;
    if (l.tokens[0] == "v") {
      std::vector<double> p;
      for (std::size_t k = 1; k < l.tokens.size(); ++k) p.push_back(to_double(l.tokens[k], l.number));
      const int expected = dim.value_or(3);
      if (static_cast<int>(p.size()) != expected) {
        parse_fail(l.number, "vertex has " + std::to_string(p.size()) + " coordinates, expected " +
                                 std::to_string(expected));
      }
      coords.push_back(std::move(p));
    } else if (l.tokens[0] == "f") {
      if (l.tokens.size() != 4) parse_fail(l.number, "only triangular faces are supported");
      Face f{};
      for (int k = 0; k < 3; ++k) {
        std::string_view tok = l.tokens[k + 1];
        tok = tok.substr(0, tok.find('/'));
        long id = to_int(tok, l.number);
        if (id < 0) id += static_cast<long>(coords.size()) + 1;
        f[k] = static_cast<int>(id - 1);
      }
      faces.push_back(f);
    }
    // other statements (vn, vt, o, g, s, usemtl) are ignored
  }
  if (coords.empty()) fail(ErrorCode::ParseError, "OBJ has no vertices");
  const int d = static_cast<int>(coords.front().size());
  Points x(static_cast<Eigen::Index>(coords.size()), d);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (int k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), k) = coords[i][k];
  }
  return finish(std::move(x), std::move(faces));
}

void write_obj(std::ostream& out, const TriMesh& mesh) {
  if (mesh.dim() != 3) out << "#dim " << mesh.dim() << '\n';
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    out << 'v';
    for (int k = 0; k < mesh.dim(); ++k) out << ' ' << format_double(mesh.vertices()(i, k));
    out << '\n';
  }
  for (const Face& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

TriMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".off" || ext == ".OFF") return read_off(in);
  if (ext == ".obj" || ext == ".OBJ") return read_obj(in);
  fail(ErrorCode::IoError, "unsupported mesh extension '" + ext + "'");
}

void write_mesh(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".off" || ext == ".OFF") {
    write_off(out, mesh);
  } else if (ext == ".obj" || ext == ".OBJ") {
    write_obj(out, mesh);
  } else {
    fail(ErrorCode::IoError, "unsupported mesh extension '" + ext + "'");
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace mcflab
