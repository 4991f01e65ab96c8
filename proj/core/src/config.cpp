#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "lbp/error.hpp"
#include "lbp/model.hpp"

namespace lbp {

namespace {

struct Statement {
  std::string text;
  std::size_t offset;  // of text within the whole config
};

std::string_view trim(std::string_view s, std::size_t* lead = nullptr) {
  std::size_t a = 0;
  while (a < s.size() && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  std::size_t b = s.size();
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  if (lead) *lead = a;
  return s.substr(a, b - a);
}

// Splits on newlines and on ';' outside brackets; drops comments.
std::vector<Statement> split_statements(std::string_view text) {
  std::vector<Statement> out;
  std::size_t start = 0;
  int depth = 0;
  bool comment = false;
  auto flush = [&](std::size_t end) {
    std::size_t lead = 0;
    const std::string_view piece = trim(text.substr(start, end - start), &lead);
    if (!piece.empty()) out.push_back({std::string(piece), start + lead});
  };
  std::size_t i = 0;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch == '\n') {
      if (!comment) flush(i);
      comment = false;
      depth = 0;
      start = i + 1;
      continue;
    }
    if (comment) continue;
    if (ch == '#') {
      flush(i);
      comment = true;
      continue;
    }
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
    if (ch == ';' && depth == 0) {
      flush(i);
      start = i + 1;
    }
  }
  if (!comment) flush(i);
  return out;
}

// "[a, b; c, d]" -> rows of cells; a bare value is a single 1x1 cell.
std::vector<std::vector<std::string>> split_matrix(std::string_view value, std::size_t offset) {
  std::vector<std::vector<std::string>> rows;
  if (value.empty() || value.front() != '[') {
    rows.push_back({std::string(value)});
    return rows;
  }
  if (value.back() != ']') throw ParseError("syntax error at position " + std::to_string(offset) + ": unclosed '['", offset);
  const std::string_view body = value.substr(1, value.size() - 2);
  std::size_t row_start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ';') {
      std::vector<std::string> cells;
      const std::string_view row = body.substr(row_start, i - row_start);
      std::size_t cell_start = 0;
      for (std::size_t j = 0; j <= row.size(); ++j) {
        if (j == row.size() || row[j] == ',') {
          const std::string_view cell = trim(row.substr(cell_start, j - cell_start));
          if (cell.empty()) {
            throw ParseError("syntax error at position " + std::to_string(offset) + ": empty sigma entry", offset);
          }
          cells.emplace_back(cell);
          cell_start = j + 1;
        }
      }
      rows.push_back(std::move(cells));
      row_start = i + 1;
    }
  }
  return rows;
}

struct Entry {
  std::string value;
  std::size_t offset;
};

Expression parse_at(const Entry& e, int k, Arguments args) {
  try {
    return Expression::parse(e.value, k, args);
  } catch (const ParseError& err) {
    const std::size_t pos = err.position() == ParseError::npos ? e.offset : e.offset + err.position();
    throw ParseError(err.what(), pos);
  }
}

}  // namespace

ModelSpec parse_model(std::string_view config_text) {
  static const std::map<std::string, std::vector<std::string>> kKnown = {
      {"model", {"k", "b", "c", "mu", "c_min"}},
      {"mutation", {"kind", "sigma"}},
  };

  std::map<std::string, Entry> entries;  // "section.key"
  std::string section = "model";
  for (auto st : split_statements(config_text)) {
    if (st.text.front() == '[') {
      // A header may share its line with the first statement: "[mutation] sigma = 0.1".
      const auto close = st.text.find(']');
      if (close == std::string::npos || st.text.find('=') < close) {
        throw ParseError("malformed section header '" + st.text + "'", st.offset);
      }
      section = std::string(trim(std::string_view(st.text).substr(1, close - 1)));
      if (!kKnown.contains(section)) throw ParseError("unknown section [" + section + "]", st.offset);
      std::size_t lead = 0;
      const std::string rest(trim(std::string_view(st.text).substr(close + 1), &lead));
      if (rest.empty()) continue;
      st = {rest, st.offset + close + 1 + lead};
    }
    const auto eq = st.text.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value', got '" + st.text + "'", st.offset);
    const std::string key(trim(std::string_view(st.text).substr(0, eq)));
    std::size_t lead = 0;
    const std::string_view value = trim(std::string_view(st.text).substr(eq + 1), &lead);
    const auto& allowed = kKnown.at(section);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError("unknown key '" + key + "' in section [" + section + "]", st.offset);
    }
    if (value.empty()) throw ParseError("missing value for '" + key + "'", st.offset);
    const std::string full = section + "." + key;
    if (entries.contains(full)) throw ParseError("duplicate key '" + key + "' in section [" + section + "]", st.offset);
    entries[full] = {std::string(value), st.offset + eq + 1 + lead};
  }

  auto get = [&](const std::string& key) -> std::optional<Entry> {
    if (auto it = entries.find(key); it != entries.end()) return it->second;
    return std::nullopt;
  };
  auto require = [&](const std::string& key) {
    auto e = get(key);
    if (!e) throw ParseError("missing required key '" + key.substr(key.find('.') + 1) + "'");
    return *e;
  };
  auto number = [](const Entry& e, const char* what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size()) {
      throw ParseError(std::string("malformed number for ") + what + ": '" + e.value + "'", e.offset);
    }
    return v;
  };

  const Entry k_entry = require("model.k");
  const double k_real = number(k_entry, "k");
  if (k_real < 1 || k_real != static_cast<double>(static_cast<int>(k_real))) {
    throw ParseError("k must be a positive integer, got '" + k_entry.value + "'", k_entry.offset);
  }
  const int k = static_cast<int>(k_real);

  Expression birth = parse_at(require("model.b"), k, Arguments::kX);
  Expression competition = parse_at(require("model.c"), k, Arguments::kXY);
  Expression mu = get("model.mu") ? parse_at(*get("model.mu"), k, Arguments::kX) : Expression::constant(1.0);
  const double c_min = get("model.c_min") ? number(*get("model.c_min"), "c_min") : 1e-9;

  KernelKind kind = KernelKind::kIsotropicGaussian;
  if (auto e = get("mutation.kind")) {
    try {
      kind = parse_kernel_kind(e->value);
    } catch (const ParseError& err) {
      throw ParseError(err.what(), e->offset);
    }
  }
  std::vector<Expression> sigma;
  if (auto e = get("mutation.sigma")) {
    const auto rows = split_matrix(e->value, e->offset);
    const bool bracketed = e->value.front() == '[';
    std::size_t cells = 0;
    for (const auto& r : rows) cells += r.size();
    switch (kind) {
      case KernelKind::kIsotropicGaussian:
        if (cells != 1) throw ParseError("isotropic-gaussian needs a scalar sigma", e->offset);
        break;
      case KernelKind::kDiagonalGaussian:
        if (rows.size() != 1 || (cells != static_cast<std::size_t>(k) && !(cells == 1 && !bracketed))) {
          throw ParseError("diagonal-gaussian needs sigma = [s1, ..., s" + std::to_string(k) + "]", e->offset);
        }
        break;
      case KernelKind::kFullGaussian:
        if (rows.size() != static_cast<std::size_t>(k) || cells != static_cast<std::size_t>(k) * k) {
          throw ParseError("full-gaussian needs a " + std::to_string(k) + "x" + std::to_string(k) + " sigma matrix",
                           e->offset);
        }
        for (const auto& r : rows) {
          if (r.size() != static_cast<std::size_t>(k)) throw ParseError("ragged sigma matrix", e->offset);
        }
        break;
    }
    for (const auto& r : rows)
      for (const auto& cell : r) sigma.push_back(parse_at({cell, e->offset}, k, Arguments::kX));
    if (kind == KernelKind::kDiagonalGaussian && sigma.size() == 1 && k > 1) sigma.assign(k, sigma.front());
  } else {
    const std::size_t n = kind == KernelKind::kIsotropicGaussian ? 1
                          : kind == KernelKind::kDiagonalGaussian ? static_cast<std::size_t>(k)
                                                                  : static_cast<std::size_t>(k) * k;
    for (std::size_t i = 0; i < n; ++i) {
      const bool diag = kind != KernelKind::kFullGaussian || i % (static_cast<std::size_t>(k) + 1) == 0;
      sigma.push_back(Expression::constant(diag ? 1.0 : 0.0));
    }
  }

  try {
    return ModelSpec(k, std::move(birth), std::move(competition), std::move(mu), c_min,
                     MutationKernel(kind, k, std::move(sigma)));
  } catch (const ModelError& err) {
    throw ParseError(err.what());
  }
}

ModelSpec load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace lbp
