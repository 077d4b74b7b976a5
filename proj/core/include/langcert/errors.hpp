#pragma once

#include <stdexcept>
#include <string>

namespace langcert {

// Thrown when an estimator is asked to work with too little / unusable data.
class statistics_error : public std::runtime_error {
 public:
  explicit statistics_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a request is outside what the implementation supports
// (e.g. grid eigensolves above the supported phase dimension).
class capability_error : public std::runtime_error {
 public:
  explicit capability_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an iterative numerical procedure fails to converge.
class numerics_error : public std::runtime_error {
 public:
  explicit numerics_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace langcert
