#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace reid::registry {

struct StoredImage {
  std::string content_hash;  // lowercase hex SHA-256 of the original bytes
  int width = 0;
  int height = 0;
  int preview_width = 0;
  int preview_height = 0;
  bool preview_downscaled = false;
};

std::string sha256_hex(std::string_view bytes);

/// Photo files on disk, keyed by content hash:
///   <root>/originals/<hash>   the uploaded bytes, never rewritten
///   <root>/previews/<hash>.jpg  JPEG, long edge at most `preview_long_edge`
class BlobStore {
 public:
  explicit BlobStore(std::filesystem::path root, int preview_long_edge = 1280);

  /// Decodes, stores the original and writes the preview. Throws
  /// ValidationError when the bytes are not a decodable image.
  StoredImage put(std::string_view bytes) const;

  bool contains(const std::string& hash) const;
  std::filesystem::path original_path(const std::string& hash) const;
  std::filesystem::path preview_path(const std::string& hash) const;
  std::string read_original(const std::string& hash) const;
  std::string read_preview(const std::string& hash) const;

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  int preview_long_edge_;
};

}  // namespace reid::registry
