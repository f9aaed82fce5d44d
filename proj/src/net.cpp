#include "pdtkit/net.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pdtkit/errors.hpp"

namespace pdtkit {

void Network::validate() const {
  if (input_dim == 0) throw ShapeError("network input dimension must be positive");
  if (layers.empty()) throw ShapeError("network must have at least one layer");
  std::size_t cur = input_dim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (l.out_dim() == 0) throw ShapeError("layer " + std::to_string(i) + " has no neurons");
    if (l.in_dim() != cur)
      throw ShapeError("layer " + std::to_string(i) + " expects input width " +
                       std::to_string(l.in_dim()) + ", got " + std::to_string(cur));
    if (l.bias.size() != l.out_dim())
      throw ShapeError("layer " + std::to_string(i) + " bias width mismatch");
    cur = l.out_dim();
  }
  if (layers.back().act != Activation::Identity)
    throw ShapeError("final layer must be affine (identity activation)");
}

Vec evaluate(const Network& net, const Vec& x) {
  if (x.size() != net.input_dim) throw ShapeError("input width mismatch");
  Vec cur = x;
  for (const Layer& l : net.layers) {
    Vec pre = l.weights.apply(cur);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += l.bias[i];
    if (l.act == Activation::ReLU)
      for (double& v : pre)
        if (v < 0.0) v = 0.0;
    cur = std::move(pre);
  }
  return cur;
}

Trace eval_trace(const Network& net, const Vec& x) {
  if (x.size() != net.input_dim) throw ShapeError("input width mismatch");
  Trace t;
  Vec cur = x;
  for (const Layer& l : net.layers) {
    Vec pre = l.weights.apply(cur);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += l.bias[i];
    t.pre.push_back(pre);
    if (l.act == Activation::ReLU)
      for (double& v : pre)
        if (v < 0.0) v = 0.0;
    t.post.push_back(pre);
    cur = std::move(pre);
  }
  return t;
}

std::size_t relu_count(const Network& net) {
  std::size_t n = 0;
  for (const Layer& l : net.layers)
    if (l.act == Activation::ReLU) n += l.out_dim();
  return n;
}

namespace {

// One branch of the joint network. `pair_rep` marks that the branch's block
// in the previous layer stores (relu(v), relu(-v)) rather than v itself.
struct BranchState {
  std::size_t block_width;  // neurons this branch occupies in the previous layer
  std::size_t logical_dim;  // dimension of the value those neurons encode
  bool pair_rep;
};

// Rows of branch `s` for combined depth `depth`, written against the
// branch's own previous block (columns 0..block_width).
struct BranchBlock {
  Matrix weights;
  Vec bias;
};

BranchBlock branch_rows(const Network& net, std::size_t depth, BranchState& s,
                        Activation combined_act) {
  Matrix eff;
  Vec bias;
  Activation own_act;
  if (depth < net.depth()) {
    const Layer& l = net.layers[depth];
    if (s.pair_rep) {
      eff = Matrix(l.out_dim(), 2 * s.logical_dim);
      for (std::size_t r = 0; r < l.out_dim(); ++r)
        for (std::size_t c = 0; c < s.logical_dim; ++c) {
          eff(r, c) = l.weights(r, c);
          eff(r, c + s.logical_dim) = -l.weights(r, c);
        }
    } else {
      eff = l.weights;
    }
    bias = l.bias;
    own_act = l.act;
  } else {
    // Carry the finished branch's output forward unchanged.
    if (s.pair_rep) {
      eff = Matrix(s.logical_dim, 2 * s.logical_dim);
      for (std::size_t i = 0; i < s.logical_dim; ++i) {
        eff(i, i) = 1.0;
        eff(i, i + s.logical_dim) = -1.0;
      }
    } else {
      eff = Matrix::identity(s.logical_dim);
    }
    bias.assign(s.logical_dim, 0.0);
    own_act = Activation::Identity;
  }

  BranchBlock out;
  if (own_act == Activation::Identity && combined_act == Activation::ReLU) {
    // Identity value crossing a ReLU layer: store the exact split
    // (relu(v), relu(-v)).
    std::size_t m = eff.rows();
    out.weights = Matrix(2 * m, eff.cols());
    out.bias.assign(2 * m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < eff.cols(); ++c) {
        out.weights(r, c) = eff(r, c);
        out.weights(r + m, c) = -eff(r, c);
      }
      out.bias[r] = bias[r];
      out.bias[r + m] = -bias[r];
    }
    s = {2 * m, m, true};
  } else {
    std::size_t m = eff.rows();
    out.weights = eff;
    out.bias = bias;
    s = {m, m, false};
  }
  return out;
}

}  // namespace

Network concatenate(const Network& a, const Network& b) {
  a.validate();
  b.validate();
  if (a.input_dim != b.input_dim)
    throw ShapeError("cannot join networks with different input dimensions");

  std::size_t depth = std::max(a.depth(), b.depth());
  BranchState sa{a.input_dim, a.input_dim, false};
  BranchState sb{b.input_dim, b.input_dim, false};

  Network out;
  out.input_dim = a.input_dim;
  for (std::size_t d = 0; d < depth; ++d) {
    Activation act = Activation::Identity;
    if (d < a.depth() && a.layers[d].act == Activation::ReLU) act = Activation::ReLU;
    if (d < b.depth() && b.layers[d].act == Activation::ReLU) act = Activation::ReLU;

    std::size_t pa = sa.block_width, pb = sb.block_width;
    BranchBlock ba = branch_rows(a, d, sa, act);
    BranchBlock bb = branch_rows(b, d, sb, act);

    Layer l;
    l.act = act;
    std::size_t rows = ba.weights.rows() + bb.weights.rows();
    if (d == 0) {
      // Both branches read the shared input columns.
      l.weights = Matrix(rows, out.input_dim);
      for (std::size_t r = 0; r < ba.weights.rows(); ++r)
        for (std::size_t c = 0; c < out.input_dim; ++c) l.weights(r, c) = ba.weights(r, c);
      for (std::size_t r = 0; r < bb.weights.rows(); ++r)
        for (std::size_t c = 0; c < out.input_dim; ++c)
          l.weights(r + ba.weights.rows(), c) = bb.weights(r, c);
    } else {
      l.weights = Matrix(rows, pa + pb);
      for (std::size_t r = 0; r < ba.weights.rows(); ++r)
        for (std::size_t c = 0; c < pa; ++c) l.weights(r, c) = ba.weights(r, c);
      for (std::size_t r = 0; r < bb.weights.rows(); ++r)
        for (std::size_t c = 0; c < pb; ++c)
          l.weights(r + ba.weights.rows(), c + pa) = bb.weights(r, c);
    }
    l.bias = ba.bias;
    l.bias.insert(l.bias.end(), bb.bias.begin(), bb.bias.end());
    out.layers.push_back(std::move(l));
  }
  out.validate();
  return out;
}

namespace {

struct TokenLine {
  std::vector<std::string> tokens;
  int line_no = 0;
};

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line after comment stripping; false at end of input.
  bool next(TokenLine& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      std::vector<std::string> toks;
      std::string t;
      while (ss >> t) toks.push_back(t);
      if (!toks.empty()) {
        out.tokens = std::move(toks);
        out.line_no = line_no_;
        return true;
      }
    }
    return false;
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

double parse_double(const std::string& tok, int line) {
  const char* s = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end != s + tok.size() || !std::isfinite(v))
    throw ParseError(line, "bad number '" + tok + "'");
  return v;
}

std::size_t parse_size(const std::string& tok, int line) {
  const char* s = tok.c_str();
  char* end = nullptr;
  long v = std::strtol(s, &end, 10);
  if (end != s + tok.size() || v <= 0) throw ParseError(line, "bad count '" + tok + "'");
  return static_cast<std::size_t>(v);
}

TokenLine require_line(LineReader& r, const char* what) {
  TokenLine tl;
  if (!r.next(tl)) throw ParseError(r.line_no() + 1, std::string("expected ") + what);
  return tl;
}

}  // namespace

Network load_ffnt(std::istream& in) {
  LineReader r(in);

  TokenLine tl = require_line(r, "header 'ffnt 1'");
  if (tl.tokens.size() != 2 || tl.tokens[0] != "ffnt" || tl.tokens[1] != "1")
    throw ParseError(tl.line_no, "expected header 'ffnt 1'");

  tl = require_line(r, "'<input_dim> <num_layers>'");
  if (tl.tokens.size() != 2)
    throw ParseError(tl.line_no, "expected '<input_dim> <num_layers>'");
  Network net;
  net.input_dim = parse_size(tl.tokens[0], tl.line_no);
  std::size_t num_layers = parse_size(tl.tokens[1], tl.line_no);

  std::size_t cur = net.input_dim;
  for (std::size_t li = 0; li < num_layers; ++li) {
    tl = require_line(r, "layer header '<rows> <cols> <relu|identity>'");
    if (tl.tokens.size() != 3)
      throw ParseError(tl.line_no, "expected '<rows> <cols> <relu|identity>'");
    Layer layer;
    std::size_t rows = parse_size(tl.tokens[0], tl.line_no);
    std::size_t cols = parse_size(tl.tokens[1], tl.line_no);
    if (tl.tokens[2] == "relu")
      layer.act = Activation::ReLU;
    else if (tl.tokens[2] == "identity")
      layer.act = Activation::Identity;
    else
      throw ParseError(tl.line_no, "unknown activation '" + tl.tokens[2] + "'");
    if (cols != cur)
      throw ParseError(tl.line_no, "layer expects input width " + std::to_string(cur) +
                                       ", header says " + std::to_string(cols));

    layer.weights = Matrix(rows, cols);
    for (std::size_t ri = 0; ri < rows; ++ri) {
      tl = require_line(r, "weight row");
      if (tl.tokens.size() != cols)
        throw ParseError(tl.line_no, "weight row needs " + std::to_string(cols) +
                                         " values, got " + std::to_string(tl.tokens.size()));
      for (std::size_t ci = 0; ci < cols; ++ci)
        layer.weights(ri, ci) = parse_double(tl.tokens[ci], tl.line_no);
    }
    tl = require_line(r, "bias row");
    if (tl.tokens.size() != rows)
      throw ParseError(tl.line_no, "bias row needs " + std::to_string(rows) +
                                       " values, got " + std::to_string(tl.tokens.size()));
    layer.bias.resize(rows);
    for (std::size_t ri = 0; ri < rows; ++ri)
      layer.bias[ri] = parse_double(tl.tokens[ri], tl.line_no);

    cur = rows;
    net.layers.push_back(std::move(layer));
  }

  TokenLine extra;
  if (r.next(extra)) throw ParseError(extra.line_no, "trailing content after last layer");
  try {
    net.validate();
  } catch (const ShapeError& e) {
    throw ParseError(r.line_no(), e.what());
  }
  return net;
}

Network load_ffnt_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return load_ffnt(in);
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_ffnt(const Network& net, std::ostream& out) {
  net.validate();
  out << "ffnt 1\n";
  out << net.input_dim << ' ' << net.layers.size() << '\n';
  for (const Layer& l : net.layers) {
    out << l.out_dim() << ' ' << l.in_dim() << ' '
        << (l.act == Activation::ReLU ? "relu" : "identity") << '\n';
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
      for (std::size_t c = 0; c < l.in_dim(); ++c) {
        if (c) out << ' ';
        out << fmt17(l.weights(r, c));
      }
      out << '\n';
    }
    for (std::size_t r = 0; r < l.out_dim(); ++r) {
      if (r) out << ' ';
      out << fmt17(l.bias[r]);
    }
    out << '\n';
  }
}

void save_ffnt_file(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save_ffnt(net, out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace pdtkit
