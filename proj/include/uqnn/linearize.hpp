#pragma once

#include <string>

#include "uqnn/network.hpp"

namespace uqnn {

/// Linearized surrogate of a net around the unperturbed input mu:
/// g(mu + z) ~= m + Q z. For a resnet the skip connection contributes
/// Q = A J_L + I and m = A R_L + mu.
struct SensitivityModel {
    Vector center;        // m, length n_y
    Matrix coefficients;  // Q, n_y x n_x
    Vector beta;          // per-input perturbation amplitude, length n_x
    Arch arch = Arch::Mlp;
    bool kink_flag = false; // some |h_nj| < 1e-12; slopes there took phi'(0)=1

    std::size_t n_y() const { return center.size(); }
    std::size_t n_x() const { return coefficients.cols(); }
    bool uniform_beta() const;
};

/// J_L = diag(phi'(h_L)) W_L ... diag(phi'(h_1)) W_1 with the h_n taken
/// from the unperturbed trace at mu.
Matrix jacobian_chain(const FeedForwardNet& net, const Vector& mu);

/// Same chain assembled through the face-splitting product, kept as a
/// cross-check of the diagonal form.
Matrix jacobian_chain_face_split(const FeedForwardNet& net, const Vector& mu);

SensitivityModel sensitivity(const FeedForwardNet& net, const Vector& mu, double beta);
SensitivityModel sensitivity(const FeedForwardNet& net, const Vector& mu, const Vector& beta);

/// m + Q z.
Vector linear_predict(const SensitivityModel& model, const Vector& z);

void save_sensitivity(const SensitivityModel& model, const std::string& path,
                      const std::string& metadata_json = "{}");
SensitivityModel load_sensitivity(const std::string& path);

} // namespace uqnn
