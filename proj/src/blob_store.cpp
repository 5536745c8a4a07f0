#include "reid/registry/blob_store.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <vector>

#include <openssl/evp.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "reid/error.hpp"

namespace reid::registry {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::StorageFault, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

namespace {

void write_file(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::StorageFault, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "missing blob " + path.filename().string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

BlobStore::BlobStore(fs::path root, int preview_long_edge)
    : root_(std::move(root)), preview_long_edge_(preview_long_edge) {
  std::error_code ec;
  fs::create_directories(root_ / "originals", ec);
  fs::create_directories(root_ / "previews", ec);
  if (ec) throw Error(ErrorCode::StorageFault, "cannot create blob store at " + root_.string());
}

StoredImage BlobStore::put(std::string_view bytes) const {
  const std::vector<unsigned char> buf(bytes.begin(), bytes.end());
  cv::Mat image = buf.empty() ? cv::Mat() : cv::imdecode(buf, cv::IMREAD_COLOR);
  if (image.empty()) throw Error(ErrorCode::ValidationError, "upload is not a decodable image");

  StoredImage info;
  info.content_hash = sha256_hex(bytes);
  info.width = image.cols;
  info.height = image.rows;

  cv::Mat preview = image;
  const int long_edge = std::max(image.cols, image.rows);
  if (long_edge > preview_long_edge_) {
    const double f = static_cast<double>(preview_long_edge_) / long_edge;
    cv::resize(image, preview, cv::Size(), f, f, cv::INTER_AREA);
    info.preview_downscaled = true;
  }
  info.preview_width = preview.cols;
  info.preview_height = preview.rows;

  if (!contains(info.content_hash)) {
    std::vector<unsigned char> jpeg;
    cv::imencode(".jpg", preview, jpeg, {cv::IMWRITE_JPEG_QUALITY, 80});
    write_file(preview_path(info.content_hash),
               std::string_view(reinterpret_cast<const char*>(jpeg.data()), jpeg.size()));
    write_file(original_path(info.content_hash), bytes);
  }
  return info;
}

bool BlobStore::contains(const std::string& hash) const { return fs::exists(original_path(hash)); }

fs::path BlobStore::original_path(const std::string& hash) const { return root_ / "originals" / hash; }

fs::path BlobStore::preview_path(const std::string& hash) const { return root_ / "previews" / (hash + ".jpg"); }

std::string BlobStore::read_original(const std::string& hash) const { return read_file(original_path(hash)); }

std::string BlobStore::read_preview(const std::string& hash) const { return read_file(preview_path(hash)); }

}  // namespace reid::registry
