#pragma once

#include <gtest/gtest.h>

#include <functional>

#include "bnn/error.hpp"

/// Category of the bnn::Error thrown by `f`; records a failure if none is thrown.
inline bnn::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const bnn::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bnn::Error thrown";
  return bnn::ErrorCode::InvalidArgument;
}

/// Message of the bnn::Error thrown by `f`.
inline std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const bnn::Error& e) {
    return e.what();
  }
  ADD_FAILURE() << "no bnn::Error thrown";
  return {};
}
