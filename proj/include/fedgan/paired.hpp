#pragma once

// Pre-concatenated multi-component samples: each row is one valid
// combination (a, b[, c]) presented to the discriminator as a single
// feature vector. component_dims records where the pieces start and end.

#include <numeric>
#include <vector>

#include "fedgan/tensor.hpp"

namespace fedgan {

struct PairedDataset {
  Tensor samples;                  // n x sum(component_dims)
  std::vector<int> component_dims;

  PairedDataset() = default;

  PairedDataset(Tensor s, std::vector<int> dims)
      : samples(std::move(s)), component_dims(std::move(dims)) {
    if (component_dims.empty()) throw ShapeError("paired dataset: no components");
    int total = 0;
    for (int d : component_dims) {
      if (d < 1) throw ShapeError("paired dataset: non-positive component dim");
      total += d;
    }
    if (samples.rank() != 2 || samples.cols() != total) {
      throw ShapeError("paired dataset: samples " + shape_str(samples.shape) +
                       " do not match component dims summing to " + std::to_string(total));
    }
  }

  int size() const { return samples.rows(); }
  int feature_dim() const { return samples.cols(); }
  int component_count() const { return static_cast<int>(component_dims.size()); }

  int component_offset(int i) const {
    int off = 0;
    for (int k = 0; k < i; ++k) off += component_dims[static_cast<size_t>(k)];
    return off;
  }

  Tensor component(int i) const {
    if (i < 0 || i >= component_count()) throw ShapeError("paired dataset: bad component index");
    const int off = component_offset(i);
    const int d = component_dims[static_cast<size_t>(i)];
    Tensor out({size(), d});
    for (int r = 0; r < size(); ++r)
      for (int j = 0; j < d; ++j) out.at(r, j) = samples.at(r, off + j);
    return out;
  }

  // Keep only the listed components, in the given order.
  PairedDataset project(const std::vector<int>& comps) const {
    if (comps.empty()) throw ShapeError("paired dataset: empty projection");
    std::vector<int> dims;
    int total = 0;
    for (int c : comps) {
      if (c < 0 || c >= component_count()) throw ShapeError("paired dataset: bad component index");
      dims.push_back(component_dims[static_cast<size_t>(c)]);
      total += dims.back();
    }
    Tensor out({size(), total});
    int col = 0;
    for (int c : comps) {
      const int off = component_offset(c);
      const int d = component_dims[static_cast<size_t>(c)];
      for (int r = 0; r < size(); ++r)
        for (int j = 0; j < d; ++j) out.at(r, col + j) = samples.at(r, off + j);
      col += d;
    }
    return PairedDataset(std::move(out), std::move(dims));
  }
};

}  // namespace fedgan
