#include "lbp/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lbp/error.hpp"

namespace lbp {

namespace {

std::string fmt_point(const TraitPoint& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.dimension(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

}  // namespace

TraitPoint::TraitPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  for (double v : coords_) {
    if (!std::isfinite(v)) throw ModelError("trait coordinates must be finite");
  }
}

TraitPoint::TraitPoint(std::initializer_list<double> coords) : TraitPoint(std::vector<double>(coords)) {}

TraitPoint::TraitPoint(const Eigen::VectorXd& v) : TraitPoint(std::vector<double>(v.data(), v.data() + v.size())) {}

Eigen::VectorXd TraitPoint::to_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(coords_.data(), static_cast<Eigen::Index>(coords_.size()));
}

TraitPoint TraitPoint::operator+(const Eigen::VectorXd& step) const {
  if (static_cast<std::size_t>(step.size()) != coords_.size()) throw ModelError("trait step has wrong dimension");
  std::vector<double> out(coords_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += step[static_cast<Eigen::Index>(i)];
  return TraitPoint(std::move(out));
}

const char* kernel_kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::kIsotropicGaussian:
      return "isotropic-gaussian";
    case KernelKind::kDiagonalGaussian:
      return "diagonal-gaussian";
    case KernelKind::kFullGaussian:
      return "full-gaussian";
  }
  return "?";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "isotropic-gaussian") return KernelKind::kIsotropicGaussian;
  if (name == "diagonal-gaussian") return KernelKind::kDiagonalGaussian;
  if (name == "full-gaussian") return KernelKind::kFullGaussian;
  throw ParseError("unknown mutation kernel kind '" + std::string(name) + "'");
}

MutationKernel::MutationKernel(KernelKind kind, int dimension, std::vector<Expression> entries)
    : kind_(kind), dimension_(dimension), entries_(std::move(entries)) {
  std::size_t expected = 1;
  if (kind == KernelKind::kDiagonalGaussian) expected = static_cast<std::size_t>(dimension);
  if (kind == KernelKind::kFullGaussian) expected = static_cast<std::size_t>(dimension) * dimension;
  if (entries_.size() != expected) {
    throw ParseError(std::string("mutation kernel '") + kernel_kind_name(kind) + "' with k=" +
                     std::to_string(dimension) + " needs " + std::to_string(expected) + " sigma entries, got " +
                     std::to_string(entries_.size()));
  }
  for (const auto& e : entries_) {
    if (e.uses_y()) throw ParseError("sigma entries may depend on x only");
  }
}

MutationKernel MutationKernel::isotropic(int dimension, double sigma) {
  return MutationKernel(KernelKind::kIsotropicGaussian, dimension, {Expression::constant(sigma)});
}

Eigen::MatrixXd MutationKernel::sigma(const TraitPoint& x) const {
  const auto k = static_cast<Eigen::Index>(dimension_);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k, k);
  switch (kind_) {
    case KernelKind::kIsotropicGaussian:
      s.diagonal().setConstant(entries_[0](x.coords()));
      break;
    case KernelKind::kDiagonalGaussian:
      for (Eigen::Index i = 0; i < k; ++i) s(i, i) = entries_[static_cast<std::size_t>(i)](x.coords());
      break;
    case KernelKind::kFullGaussian:
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) s(i, j) = entries_[static_cast<std::size_t>(i * k + j)](x.coords());
      break;
  }
  if (!s.allFinite()) throw ModelError("sigma is not finite at " + fmt_point(x));
  return s;
}

Eigen::VectorXd MutationKernel::sample(const TraitPoint& x, Rng& rng) const {
  Eigen::VectorXd g(dimension_);
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = standard_normal(rng);
  return sigma(x) * g;
}

ModelSpec::ModelSpec(int dimension, Expression birth, Expression competition, Expression mutation_prob, double c_min,
                     MutationKernel kernel)
    : dimension_(dimension),
      birth_(std::move(birth)),
      competition_(std::move(competition)),
      mutation_prob_(std::move(mutation_prob)),
      c_min_(c_min),
      kernel_(std::move(kernel)) {
  if (dimension_ < 1) throw ModelError("trait dimension k must be positive");
  if (!(c_min_ > 0.0) || !std::isfinite(c_min_)) throw ModelError("c_min must be finite and > 0");
  if (birth_.uses_y() || mutation_prob_.uses_y()) throw ModelError("b and mu may depend on x only");
}

void ModelSpec::check_point(const TraitPoint& x) const {
  if (x.dimension() != static_cast<std::size_t>(dimension_)) {
    throw ModelError("trait " + fmt_point(x) + " has dimension " + std::to_string(x.dimension()) + ", model has k=" +
                     std::to_string(dimension_));
  }
}

double ModelSpec::b(const TraitPoint& x) const {
  check_point(x);
  const double v = birth_(x.coords());
  if (!std::isfinite(v) || v <= 0.0) {
    throw ModelError("b" + fmt_point(x) + " = " + std::to_string(v) + " is not a positive finite rate");
  }
  return v;
}

double ModelSpec::c(const TraitPoint& x, const TraitPoint& y) const {
  check_point(x);
  check_point(y);
  const double v = competition_(x.coords(), y.coords());
  if (!std::isfinite(v)) throw ModelError("c" + fmt_point(x) + fmt_point(y) + " is not finite");
  if (v < c_min_) {
    std::ostringstream os;
    os << "c" << fmt_point(x) << fmt_point(y) << " = " << v << " is below c_min = " << c_min_;
    throw ModelError(os.str());
  }
  return v;
}

double ModelSpec::mu(const TraitPoint& x) const {
  check_point(x);
  const double v = mutation_prob_(x.coords());
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw ModelError("mu" + fmt_point(x) + " = " + std::to_string(v) + " is outside [0, 1]");
  }
  return v;
}

double ModelSpec::theta(const TraitPoint& x) const { return b(x) / c(x, x); }

ModelSpec ModelSpec::with_competition_scaled(double k) const {
  if (!(k > 0.0) || !std::isfinite(k)) throw ModelError("competition scale must be positive");
  std::ostringstream os;
  os.precision(17);
  os << "(" << competition_.source() << ")/" << k;
  ModelSpec out = *this;
  out.competition_ = Expression::parse(os.str(), dimension_, Arguments::kXY);
  out.c_min_ = c_min_ / k;
  return out;
}

ModelSpec ModelSpec::with_kernel(MutationKernel kernel) const {
  ModelSpec out = *this;
  out.kernel_ = std::move(kernel);
  return out;
}

std::string ModelSpec::to_config() const {
  std::ostringstream os;
  os.precision(17);
  os << "[model]\n"
     << "k = " << dimension_ << "\n"
     << "b = " << birth_.source() << "\n"
     << "c = " << competition_.source() << "\n"
     << "mu = " << mutation_prob_.source() << "\n"
     << "c_min = " << c_min_ << "\n"
     << "[mutation]\n"
     << "kind = " << kernel_kind_name(kernel_.kind()) << "\n"
     << "sigma = ";
  const auto& e = kernel_.entries();
  if (kernel_.kind() == KernelKind::kIsotropicGaussian) {
    os << e[0].source();
  } else {
    os << '[';
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (i) {
        const bool row_break =
            kernel_.kind() == KernelKind::kFullGaussian && i % static_cast<std::size_t>(dimension_) == 0;
        os << (row_break ? "; " : ", ");
      }
      os << e[i].source();
    }
    os << ']';
  }
  os << "\n";
  return os.str();
}

TwoTypeRates eval_rates(const ModelSpec& m, const TraitPoint& x, const TraitPoint& y) {
  TwoTypeRates r;
  r.b_x = m.b(x);
  r.b_y = m.b(y);
  r.c_xx = m.c(x, x);
  r.c_xy = m.c(x, y);
  r.c_yx = m.c(y, x);
  r.c_yy = m.c(y, y);
  return r;
}

namespace {

template <typename F>
Eigen::VectorXd central_gradient(const TraitPoint& x, F&& f) {
  const std::size_t k = x.dimension();
  Eigen::VectorXd g(static_cast<Eigen::Index>(k));
  std::vector<double> probe(x.coords().begin(), x.coords().end());
  for (std::size_t i = 0; i < k; ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(TraitPoint(probe));
    probe[i] = x[i] - h;
    const double down = f(TraitPoint(probe));
    probe[i] = x[i];
    // Divide by the representable step actually taken.
    const double span = (x[i] + h) - (x[i] - h);
    g[static_cast<Eigen::Index>(i)] = (up - down) / span;
  }
  if (!g.allFinite()) throw NumericalError("non-finite gradient");
  return g;
}

}  // namespace

Eigen::VectorXd grad_b(const ModelSpec& m, const TraitPoint& x) {
  return central_gradient(x, [&](const TraitPoint& p) { return m.b(p); });
}

Eigen::VectorXd grad_c1(const ModelSpec& m, const TraitPoint& x) {
  return central_gradient(x, [&](const TraitPoint& p) { return m.c(p, x); });
}

Eigen::VectorXd grad_c2(const ModelSpec& m, const TraitPoint& x) {
  return central_gradient(x, [&](const TraitPoint& p) { return m.c(x, p); });
}

}  // namespace lbp
