#pragma once

#include <filesystem>

#include "slicerl/binary_io.hpp"
#include "slicerl/mlp.hpp"

namespace slicerl {

template <typename Scalar>
void save(BinaryWriter& w, const Mlp<Scalar>& net) {
  w.str("mlp");
  w.u32(static_cast<std::uint32_t>(net.sizes().size()));
  for (int s : net.sizes()) w.u32(static_cast<std::uint32_t>(s));
  w.str(to_string(net.activation()));
  w.array(net.params());
}

template <typename Scalar>
Mlp<Scalar> load_mlp(BinaryReader& r) {
  if (r.str() != "mlp") throw std::runtime_error("checkpoint: expected an mlp record");
  std::vector<int> sizes(r.u32());
  for (auto& s : sizes) s = static_cast<int>(r.u32());
  Mlp<Scalar> net(sizes, activation_from_string(r.str()));
  auto params = r.array<typename Mlp<Scalar>::Vector>();
  if (params.size() != net.n_params()) throw std::runtime_error("checkpoint: mlp parameter count mismatch");
  net.params() = params;
  return net;
}

template <typename Scalar>
void save(BinaryWriter& w, const AdamState<Scalar>& s) {
  w.str("adam");
  w.i64(s.step_count);
  w.f64(s.learning_rate);
  w.f64(s.beta1);
  w.f64(s.beta2);
  w.f64(s.epsilon);
  w.array(s.first_moment);
  w.array(s.second_moment);
}

template <typename Scalar>
AdamState<Scalar> load_adam(BinaryReader& r) {
  if (r.str() != "adam") throw std::runtime_error("checkpoint: expected an adam record");
  AdamState<Scalar> s;
  s.step_count = r.i64();
  s.learning_rate = static_cast<Scalar>(r.f64());
  s.beta1 = static_cast<Scalar>(r.f64());
  s.beta2 = static_cast<Scalar>(r.f64());
  s.epsilon = static_cast<Scalar>(r.f64());
  s.first_moment = r.array<typename AdamState<Scalar>::Vector>();
  s.second_moment = r.array<typename AdamState<Scalar>::Vector>();
  return s;
}

/// Stand-alone network file.
template <typename Scalar>
void save_mlp_file(const std::filesystem::path& path, const Mlp<Scalar>& net) {
  BinaryWriter w;
  save(w, net);
  write_container(path, w.bytes());
}

template <typename Scalar>
Mlp<Scalar> load_mlp_file(const std::filesystem::path& path) {
  const std::string payload = read_container(path);
  BinaryReader r(payload);
  return load_mlp<Scalar>(r);
}

}  // namespace slicerl
