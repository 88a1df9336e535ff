#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpgopt {

enum class Formulation { primal, ultraweak };

inline std::string_view to_string(Formulation f) {
  return f == Formulation::primal ? "primal" : "ultraweak";
}

inline Formulation formulation_from_string(std::string_view s) {
  if (s == "primal") return Formulation::primal;
  if (s == "ultraweak") return Formulation::ultraweak;
  throw std::invalid_argument("unknown formulation '" + std::string(s) + "'");
}

/// c0 + c1 x + c2 x^2. Every coefficient in the pricing PDEs (and their
/// parameter derivatives) has this form.
template <typename Scalar = double>
struct Quadratic {
  Scalar c0 = 0;
  Scalar c1 = 0;
  Scalar c2 = 0;

  Scalar operator()(Scalar x) const { return c0 + x * (c1 + x * c2); }
  Scalar derivative(Scalar x) const { return c1 + 2 * c2 * x; }
  bool is_constant() const { return c1 == 0 && c2 == 0; }
  bool is_zero() const { return c0 == 0 && c1 == 0 && c2 == 0; }
};

/// Spatial operator L u = -a u'' - b u' + c u; the pricing PDE is u_tau + L u = 0.
template <typename Scalar = double>
struct OperatorCoefficients {
  Quadratic<Scalar> diffusion;   // a(x)
  Quadratic<Scalar> convection;  // b(x)
  Quadratic<Scalar> reaction;    // c(x)

  bool is_constant() const {
    return diffusion.is_constant() && convection.is_constant() && reaction.is_constant();
  }
  bool is_zero() const { return diffusion.is_zero() && convection.is_zero() && reaction.is_zero(); }
};

/// One theta-step of u_tau + L u = 0:
///   (u^{n+1}, v) + dt*theta*L(u^{n+1}; v) = (u^n, v) - dt*(1-theta)*L(u^n; v).
template <typename Scalar = double>
struct FormSpec {
  Formulation formulation = Formulation::primal;
  OperatorCoefficients<Scalar> coefficients;
  Scalar dt = 1;
  Scalar theta = 1;

  Scalar implicit_scale() const { return dt * theta; }

  void validate() const {
    if (!(theta >= 0 && theta <= 1)) throw std::invalid_argument("FormSpec: theta outside [0, 1]");
    if (!(dt > 0)) throw std::invalid_argument("FormSpec: dt must be positive");
  }
};

/// Test-space inner product.
///
/// Primal:     value_weight (v, v) + gradient_weight (d v', d v')
/// Ultraweak:  value_weight |A*_u (v,w)|^2 + gradient_weight |A*_g (v,w)|^2
///             + l2_weight (|v|^2 + |w|^2)
/// where A*_u, A*_g are the components of the adjoint of the step operator
/// paired with the field u and with its gradient.
template <typename Scalar = double>
struct NormSpec {
  Formulation formulation = Formulation::primal;
  Scalar value_weight = 1;
  Scalar gradient_weight = 0;
  Scalar gradient_scale = 1;  // d, primal only
  Scalar l2_weight = 0;       // ultraweak only
  FormSpec<Scalar> adjoint_of;  // ultraweak only

  void validate() const {
    if (!(value_weight > 0)) throw std::invalid_argument("NormSpec: value weight must be positive");
    if (gradient_weight < 0 || l2_weight < 0)
      throw std::invalid_argument("NormSpec: negative weight");
    if (formulation == Formulation::ultraweak && !(l2_weight > 0 || gradient_weight > 0))
      throw std::invalid_argument("NormSpec: ultraweak norm needs a positive gradient or L2 weight");
  }
};

/// Energy-type norm (1/dt)|v|^2 + (1/dt^2)|d v'|^2.
template <typename Scalar>
NormSpec<Scalar> primal_energy_norm(Scalar dt, Scalar gradient_scale) {
  NormSpec<Scalar> n;
  n.formulation = Formulation::primal;
  n.value_weight = 1 / dt;
  n.gradient_weight = 1 / (dt * dt);
  n.gradient_scale = gradient_scale;
  return n;
}

/// Adjoint graph norm of the step operator plus an L2 term of weight alpha.
template <typename Scalar>
NormSpec<Scalar> ultraweak_graph_norm(const FormSpec<Scalar>& form, Scalar alpha = 1) {
  NormSpec<Scalar> n;
  n.formulation = Formulation::ultraweak;
  n.value_weight = 1;
  n.gradient_weight = 1;
  n.l2_weight = alpha;
  n.adjoint_of = form;
  return n;
}

}  // namespace dpgopt
