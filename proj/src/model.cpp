#include "wolbachia/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wolbachia {

ModelParameters ModelParameters::wmelpop() noexcept {
    ModelParameters p;
    p.rho_n = 4.55;
    p.rho_w = 2.27;
    p.alpha_n = 0.03333;
    p.alpha_w = 0.06666;
    p.beta_n = 2.61258e-3;
    p.beta_w = 3.12792e-3;
    return p;
}

ValidationReport validate_params(const ModelParameters& p) {
    ValidationReport r;
    const std::pair<const char*, double> fields[] = {
        {"rho_n", p.rho_n},     {"rho_w", p.rho_w},   {"alpha_n", p.alpha_n},
        {"alpha_w", p.alpha_w}, {"beta_n", p.beta_n}, {"beta_w", p.beta_w},
    };
    r.positive = true;
    for (const auto& [name, value] : fields) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            r.positive = false;
            r.violations.push_back(std::string(name) + " must be a finite positive number");
        }
    }
    r.survival_n = p.rho_n > p.alpha_n;
    if (!r.survival_n) r.violations.emplace_back("survival of the wild population requires rho_n > alpha_n");
    r.survival_w = p.rho_w > p.alpha_w;
    if (!r.survival_w) r.violations.emplace_back("survival of the infected population requires rho_w > alpha_w");
    r.coexistence = r.positive && p.n_sharp() > p.w_sharp();
    if (!r.coexistence) r.violations.emplace_back("coexistence equilibrium requires n_sharp > w_sharp");
    return r;
}

void require_in_scope(const ModelParameters& p) {
    const auto r = validate_params(p);
    if (r.in_scope()) return;
    std::ostringstream os;
    os << "parameters outside model scope:";
    for (const auto& v : r.violations) {
        if (v.find("coexistence") == std::string::npos) os << ' ' << v << ';';
    }
    throw ValidationError(os.str());
}

Rates vector_field_unchecked(const ModelParameters& p, double n, double w) noexcept {
    const double total = n + w;
    const double freq = total > 0.0 ? n / total : 0.0;
    return {
        p.rho_n * n * freq - p.alpha_n * n - p.beta_n * n * total,
        p.rho_w * w - p.alpha_w * w - p.beta_w * w * total,
    };
}

Rates vector_field(const ModelParameters& p, const PopulationState& s) {
    if (s.n < 0.0 || s.w < 0.0) {
        throw ValidationError("vector_field: state must lie in the nonnegative quadrant");
    }
    return vector_field_unchecked(p, s.n, s.w);
}

Matrix2 jacobian(const ModelParameters& p, const PopulationState& s) {
    const double n = s.n;
    const double w = s.w;
    const double total = n + w;
    if (!(total > 0.0)) {
        throw ValidationError(
            "jacobian: singular at the origin (the frequency term is not differentiable "
            "there; the origin is classified as a source by rule)");
    }
    const double t2 = total * total;
    Matrix2 j;
    j[0][0] = p.rho_n * (1.0 - w * w / t2) - p.alpha_n - p.beta_n * (w + 2.0 * n);
    j[0][1] = -n * (p.beta_n + p.rho_n * n / t2);
    j[1][0] = -p.beta_w * w;
    j[1][1] = p.rho_w - p.alpha_w - p.beta_w * (n + 2.0 * w);
    return j;
}

Matrix2 cooperative_jacobian(const ModelParameters& p, const PopulationState& s) {
    Matrix2 j = jacobian(p, s);
    j[0][1] = -j[0][1];
    j[1][0] = -j[1][0];
    return j;
}

double determinant(const Matrix2& m) noexcept { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
double trace(const Matrix2& m) noexcept { return m[0][0] + m[1][1]; }

EquilibriumSet equilibria(const ModelParameters& p) {
    require_in_scope(p);
    EquilibriumSet e;
    e.n_sharp = p.n_sharp();
    e.w_sharp = p.w_sharp();
    e.e0 = {0.0, 0.0};
    e.e_n = {e.n_sharp, 0.0};
    e.e_w = {0.0, e.w_sharp};
    if (e.n_sharp > e.w_sharp) {
        const double w_c = e.w_sharp * (p.beta_n / p.rho_n) * (e.n_sharp - e.w_sharp);
        const double n_c = e.w_sharp - w_c;
        // n_c <= 0 means the interior point left the quadrant; no coexistence.
        if (n_c > 0.0 && w_c > 0.0) e.e_c = PopulationState{n_c, w_c};
    }
    return e;
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::nodal_attractor: return "nodal_attractor";
        case Classification::saddle: return "saddle";
        case Classification::source: return "source";
        case Classification::degenerate: return "degenerate";
    }
    return "degenerate";
}

namespace {

std::array<double, 2> normalised(double x, double y) {
    const double len = std::hypot(x, y);
    x /= len;
    y /= len;
    if (x < 0.0 || (x == 0.0 && y < 0.0)) {
        x = -x;
        y = -y;
    }
    return {x + 0.0, y + 0.0};
}

std::array<double, 2> eigenvector(const Matrix2& m, double lambda, int fallback_axis) {
    const double a = m[0][0], b = m[0][1], c = m[1][0], d = m[1][1];
    const double v1x = b, v1y = lambda - a;
    const double v2x = lambda - d, v2y = c;
    const double n1 = std::hypot(v1x, v1y);
    const double n2 = std::hypot(v2x, v2y);
    if (std::max(n1, n2) == 0.0) {
        return fallback_axis == 0 ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
    }
    return n1 >= n2 ? normalised(v1x, v1y) : normalised(v2x, v2y);
}

Classification classify_real_parts(double lo, double hi) {
    if (lo < 0.0 && hi < 0.0) return Classification::nodal_attractor;
    if (lo > 0.0 && hi > 0.0) return Classification::source;
    if (lo < 0.0 && hi > 0.0) return Classification::saddle;
    return Classification::degenerate;
}

}  // namespace

Eigen2 eigen_decompose(const Matrix2& m) {
    const double a = m[0][0], b = m[0][1], c = m[1][0], d = m[1][1];
    const double half_tr = 0.5 * (a + d);
    const double half_gap = 0.5 * (a - d);
    const double disc = half_gap * half_gap + b * c;
    Eigen2 out;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        // Larger-magnitude root first, the other from det / root to avoid cancellation.
        const double big = half_tr + std::copysign(s, half_tr);
        const double small = big != 0.0 ? determinant(m) / big : 0.0;
        double l0 = std::min(big, small), l1 = std::max(big, small);
        out.values = {std::complex<double>(l0, 0.0), std::complex<double>(l1, 0.0)};
        out.vectors = std::array<std::array<double, 2>, 2>{eigenvector(m, l0, 0), eigenvector(m, l1, 1)};
        out.real = true;
    } else {
        const double im = std::sqrt(-disc);
        out.values = {std::complex<double>(half_tr, -im), std::complex<double>(half_tr, im)};
        out.real = false;
    }
    return out;
}

const EquilibriumStability* StabilityReport::find(const std::string& name) const noexcept {
    for (const auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

StabilityReport classify_stability(const ModelParameters& p) {
    const EquilibriumSet eq = equilibria(p);
    StabilityReport report;

    EquilibriumStability origin;
    origin.name = "e0";
    origin.point = eq.e0;
    origin.classification = Classification::source;
    report.entries.push_back(origin);

    auto spectral = [&](const std::string& name, const PopulationState& pt) {
        EquilibriumStability rec;
        rec.name = name;
        rec.point = pt;
        const Eigen2 eig = eigen_decompose(jacobian(p, pt));
        rec.eigenvalues.assign(eig.values.begin(), eig.values.end());
        if (eig.real) {
            rec.eigenvectors.assign(eig.vectors->begin(), eig.vectors->end());
            rec.classification = classify_real_parts(eig.values[0].real(), eig.values[1].real());
        } else {
            rec.unexpected_complex = true;
            const double re = eig.values[0].real();
            rec.classification = re < 0.0   ? Classification::nodal_attractor
                                 : re > 0.0 ? Classification::source
                                            : Classification::degenerate;
        }
        report.entries.push_back(std::move(rec));
    };
    spectral("e_n", eq.e_n);
    spectral("e_w", eq.e_w);
    if (eq.e_c) spectral("e_c", *eq.e_c);
    return report;
}

bool order_leq_cone(const PopulationState& a, const PopulationState& b) noexcept {
    return a.n <= b.n && a.w >= b.w;
}

bool order_less_cone(const PopulationState& a, const PopulationState& b) noexcept {
    return order_leq_cone(a, b) && !(a == b);
}

bool order_strong_cone(const PopulationState& a, const PopulationState& b) noexcept {
    return a.n < b.n && a.w > b.w;
}

}  // namespace wolbachia
