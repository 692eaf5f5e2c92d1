#pragma once

#include <vector>

#include "stylegest/core/autograd.hpp"

namespace stylegest {

class Adam {
public:
    explicit Adam(std::vector<ag::Var> params, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.0)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
          weight_decay_(weight_decay) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (auto& p : params_) {
            m_.emplace_back(p.value().shape());
            v_.emplace_back(p.value().shape());
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            if (!p.node()->grad_ready) continue;
            const Array& g = p.node()->grad;
            Array& val = p.mutable_value();
            Array& m = m_[k];
            Array& v = v_[k];
            for (idx i = 0; i < val.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                val[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
                if (weight_decay_ > 0.0) val[i] -= lr_ * weight_decay_ * val[i];
            }
        }
    }

    bool params_finite() const {
        for (const auto& p : params_)
            if (!p.value().all_finite()) return false;
        return true;
    }

private:
    std::vector<ag::Var> params_;
    double lr_, beta1_, beta2_, eps_;
    double weight_decay_ = 0.0;
    long t_ = 0;
    std::vector<Array> m_, v_;
};

}  // namespace stylegest
