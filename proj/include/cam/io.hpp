#ifndef CAM_IO_HPP_
#define CAM_IO_HPP_

#include <string>

#include "cam/dataset.hpp"

namespace cam {

// CAMF binary embedding format, little-endian throughout:
//   magic   "CAMF" (4 bytes)
//   u32     version (currently 1)
//   u32     n_samples
//   u32     dim
//   u8      normalized flag (0 or 1)
//   f32[n_samples * dim]   features, sample-major (sample i's dim floats)
//   u32[n_samples]         labels
//   u32     n_classes
//   n_classes x { u32 byte_length, UTF-8 bytes }  class names
//
// CSV alternative: header "label,f0,...,f{D-1}", one sample per row, floats
// printed with 9 significant digits so float32 values round-trip exactly.

inline constexpr std::uint32_t kCamfVersion = 1;

void save_camf(const EmbeddingSet& set, const std::string& path);

/// Loads and validates a CAMF file. With normalize set, features are scaled
/// to unit L2 norm after loading.
EmbeddingSet load_camf(const std::string& path, bool normalize = false);

void save_csv(const EmbeddingSet& set, const std::string& path);
EmbeddingSet load_csv(const std::string& path, bool normalize = false);

/// Dispatches on the ".csv" suffix, otherwise reads CAMF.
EmbeddingSet load_embeddings(const std::string& path, bool normalize = false);

}  // namespace cam

#endif  // CAM_IO_HPP_
