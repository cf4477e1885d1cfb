#pragma once

#include <koopman/dictionary.hpp>
#include <koopman/types.hpp>

#include <initializer_list>
#include <memory>
#include <vector>

namespace testing {

inline koopman::Vector vec(std::initializer_list<double> xs) {
    koopman::Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

inline koopman::Box box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
    return {vec(lo), vec(hi)};
}

// 1-D dictionary [x, g_1(x), ...] from scalar lambdas.
inline koopman::DictionaryPtr scalar_dictionary(std::vector<double (*)(double)> gs) {
    std::vector<koopman::FunctionDictionary::Observable> obs;
    for (auto g : gs) obs.emplace_back([g](const koopman::Vector& x) { return g(x(0)); });
    return std::make_shared<koopman::FunctionDictionary>(1, std::move(obs));
}

}  // namespace testing
