#include "twin/zip.hpp"

#include <cstdint>
#include <cstring>

#include <zlib.h>

#include "twin/error.hpp"

namespace twin::zip {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDirSig = 0x06054b50;
constexpr std::size_t kEndOfCentralDirSize = 22;
constexpr std::size_t kLocalHeaderSize = 30;
constexpr std::size_t kCentralHeaderSize = 46;

[[noreturn]] void corrupt(const std::string& what, const std::string& path = {}) {
  throw Error(ErrorCode::archive, "corrupt archive: " + what, path);
}

std::uint16_t u16(std::string_view b, std::size_t at) {
  if (at + 2 > b.size()) corrupt("truncated record");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

std::uint32_t u32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(u16(b, at)) | (static_cast<std::uint32_t>(u16(b, at + 2)) << 16);
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(std::string& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v & 0xffff));
  put16(out, static_cast<std::uint16_t>(v >> 16));
}

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

std::string inflate_raw(std::string_view compressed, std::size_t expected, const std::string& name) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
    corrupt("inflate init failed", name);
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) {
    corrupt("deflate stream does not decode to the declared size", name);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> read_archive(std::string_view bytes) {
  if (bytes.size() < kEndOfCentralDirSize) {
    corrupt("too short for a ZIP archive");
  }
  // End-of-central-directory record sits within the last 64 KiB + 22 bytes.
  std::size_t eocd = std::string_view::npos;
  const std::size_t lowest = bytes.size() > 0xffff + kEndOfCentralDirSize ? bytes.size() - 0xffff - kEndOfCentralDirSize : 0;
  for (std::size_t at = bytes.size() - kEndOfCentralDirSize + 1; at-- > lowest;) {
    if (u32(bytes, at) == kEndOfCentralDirSig) {
      eocd = at;
      break;
    }
  }
  if (eocd == std::string_view::npos) {
    corrupt("no end-of-central-directory record");
  }
  const std::uint16_t count = u16(bytes, eocd + 10);
  const std::uint32_t cd_size = u32(bytes, eocd + 12);
  const std::uint32_t cd_offset = u32(bytes, eocd + 16);
  if (count == 0xffff || cd_offset == 0xffffffff) {
    corrupt("ZIP64 archives are not supported");
  }
  if (static_cast<std::size_t>(cd_offset) + cd_size > eocd) {
    corrupt("central directory out of bounds");
  }

  std::map<std::string, std::string> entries;
  std::size_t at = cd_offset;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (u32(bytes, at) != kCentralHeaderSig) {
      corrupt("bad central directory header");
    }
    const std::uint16_t flags = u16(bytes, at + 8);
    const std::uint16_t method = u16(bytes, at + 10);
    const std::uint32_t crc = u32(bytes, at + 16);
    const std::uint32_t csize = u32(bytes, at + 20);
    const std::uint32_t usize = u32(bytes, at + 24);
    const std::uint16_t name_len = u16(bytes, at + 28);
    const std::uint16_t extra_len = u16(bytes, at + 30);
    const std::uint16_t comment_len = u16(bytes, at + 32);
    const std::uint32_t local = u32(bytes, at + 42);
    if (at + kCentralHeaderSize + name_len > bytes.size()) {
      corrupt("truncated central directory");
    }
    std::string name(bytes.substr(at + kCentralHeaderSize, name_len));
    at += kCentralHeaderSize + name_len + extra_len + comment_len;

    if (!name.empty() && name.back() == '/') {
      continue;  // directory entry
    }
    if (flags & 0x1) {
      corrupt("encrypted entries are not supported", name);
    }
    if (u32(bytes, local) != kLocalHeaderSig) {
      corrupt("bad local header", name);
    }
    const std::size_t data = local + kLocalHeaderSize + u16(bytes, local + 26) + u16(bytes, local + 28);
    if (data + csize > bytes.size()) {
      corrupt("entry data out of bounds", name);
    }
    const auto raw = bytes.substr(data, csize);
    std::string content;
    if (method == 0) {
      if (csize != usize) corrupt("stored entry size mismatch", name);
      content = std::string(raw);
    } else if (method == 8) {
      content = inflate_raw(raw, usize, name);
    } else {
      corrupt("unsupported compression method " + std::to_string(method), name);
    }
    if (crc_of(content) != crc) {
      corrupt("CRC mismatch", name);
    }
    entries.emplace(std::move(name), std::move(content));
  }
  return entries;
}

std::string write_archive(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  std::string central;
  for (const auto& [name, data] : entries) {
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto crc = crc_of(data);
    const auto size = static_cast<std::uint32_t>(data.size());
    const auto name_len = static_cast<std::uint16_t>(name.size());

    put32(out, kLocalHeaderSig);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // stored
    put16(out, 0);   // mod time
    put16(out, 0x21);  // mod date 1980-01-01
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, name_len);
    put16(out, 0);
    out += name;
    out += data;

    put32(central, kCentralHeaderSig);
    put16(central, 20);  // version made by
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, name_len);
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central += name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndOfCentralDirSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

}  // namespace twin::zip
