#pragma once

#include <vector>

#include "autodiff.hpp"

namespace ghn {

/// Adam with L2 weight decay folded into the gradient (decay only on
/// parameters flagged `decay`). Frozen parameters are skipped.
class Adam {
public:
    Adam(std::vector<Parameter*> params, double lr, double weight_decay, double beta1 = 0.9,
         double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay), beta1_(beta1),
          beta2_(beta2), eps_(eps) {
        for (Parameter* p : params_) {
            m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
    }

    void zero_grad() {
        for (Parameter* p : params_) p->zero_grad();
    }

    void step() {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Parameter& p = *params_[i];
            if (!p.trainable) continue;
            Matrix g = p.grad;
            if (p.decay && weight_decay_ != 0.0) g += weight_decay_ * p.value;
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
            p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
        }
    }

    int steps() const noexcept { return t_; }

private:
    std::vector<Parameter*> params_;
    std::vector<Matrix> m_, v_;
    double lr_, weight_decay_, beta1_, beta2_, eps_;
    int t_ = 0;
};

} // namespace ghn
