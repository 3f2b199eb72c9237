#pragma once

#include <optional>
#include <utility>

namespace otss {

enum class BlockReason {
  none,
  latency,   // every candidate route exceeded the request's latency bound
  resource,  // some candidate was within the bound but nothing fit
};

const char* to_string(BlockReason reason);

/// Result of an admission attempt: either the accepted allocation or the
/// reason the request was blocked.
template <class T>
class Admission {
 public:
  static Admission accept(T value) { return Admission(std::move(value), BlockReason::none); }
  static Admission block(BlockReason reason) { return Admission(std::nullopt, reason); }

  bool admitted() const noexcept { return value_.has_value(); }
  explicit operator bool() const noexcept { return admitted(); }
  BlockReason reason() const noexcept { return reason_; }

  T& value() { return value_.value(); }
  const T& value() const { return value_.value(); }
  T* operator->() { return &value_.value(); }
  const T* operator->() const { return &value_.value(); }

 private:
  Admission(std::optional<T> v, BlockReason r) : value_(std::move(v)), reason_(r) {}

  std::optional<T> value_;
  BlockReason reason_;
};

}  // namespace otss
