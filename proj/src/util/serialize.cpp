// SPDX-License-Identifier: Apache-2.0
#include "tivgan/util/serialize.hpp"

#include "tivgan/errors.hpp"

namespace tivgan {

void ByteWriter::put_string(const std::string& s) {
  put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
  put_bytes(s.data(), s.size());
}

void ByteWriter::put_bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  bytes_.insert(bytes_.end(), p, p + n);
}

std::string ByteReader::get_string() {
  const auto n = get<std::uint32_t>();
  if (n > remaining()) throw FormatError("truncated " + context_ + ": string length past end");
  std::string s(n, '\0');
  read_raw(s.data(), n);
  return s;
}

ByteReader ByteReader::sub(std::size_t n, std::string context) {
  if (n > remaining()) throw FormatError("truncated " + context_ + ": section " + context + " past end");
  ByteReader r(data_ + pos_, n, std::move(context));
  pos_ += n;
  return r;
}

void ByteReader::read_raw(void* out, std::size_t n) {
  if (n > remaining()) throw FormatError("truncated " + context_);
  std::memcpy(out, data_ + pos_, n);
  pos_ += n;
}

}  // namespace tivgan
