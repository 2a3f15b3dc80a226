#include "spikeforge/npz.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace spikeforge {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralDirSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDirSig = 0x06054b50;
// DOS timestamp 1980-01-01 00:00:00, the conventional fixed stamp.
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = 0x0021;

void put16(std::vector<std::uint8_t> &out, std::uint16_t v)
{
	out.push_back(static_cast<std::uint8_t>(v & 0xff));
	out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t> &out, std::uint32_t v)
{
	for (int i = 0; i < 4; i++) {
		out.push_back(static_cast<std::uint8_t>(v & 0xff));
		v >>= 8;
	}
}

std::uint16_t get16(const std::uint8_t *p)
{
	return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get32(const std::uint8_t *p)
{
	return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
	       (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> inflate_raw(const std::uint8_t *src, std::size_t src_len,
                                      std::size_t dst_len, const std::string &name)
{
	std::vector<std::uint8_t> out(dst_len);
	z_stream zs;
	std::memset(&zs, 0, sizeof(zs));
	if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
		throw std::runtime_error("zip: inflateInit failed for entry " + name);
	}
	zs.next_in = const_cast<Bytef *>(src);
	zs.avail_in = static_cast<uInt>(src_len);
	zs.next_out = out.data();
	zs.avail_out = static_cast<uInt>(dst_len);
	const int rc = inflate(&zs, Z_FINISH);
	inflateEnd(&zs);
	if (rc != Z_STREAM_END || zs.total_out != dst_len) {
		throw std::runtime_error("zip: corrupt deflate stream in entry " + name);
	}
	return out;
}

}  // namespace

void write_zip(const std::filesystem::path &path, const std::vector<ZipEntry> &entries)
{
	std::vector<std::uint8_t> out;
	struct Record {
		std::uint32_t crc, size, offset;
		std::string name;
	};
	std::vector<Record> records;

	for (const auto &e : entries) {
		if (e.data.size() > 0xfffffffeULL) {
			throw std::runtime_error("zip: entry " + e.name + " exceeds 4 GiB");
		}
		Record r;
		r.offset = static_cast<std::uint32_t>(out.size());
		r.name = e.name;
		r.size = static_cast<std::uint32_t>(e.data.size());
		r.crc = static_cast<std::uint32_t>(
		    crc32(0, e.data.empty() ? Z_NULL : e.data.data(), static_cast<uInt>(e.data.size())));

		put32(out, kLocalHeaderSig);
		put16(out, 20);        // version needed
		put16(out, 0);         // flags
		put16(out, 0);         // method: stored
		put16(out, kDosTime);
		put16(out, kDosDate);
		put32(out, r.crc);
		put32(out, r.size);    // compressed
		put32(out, r.size);    // uncompressed
		put16(out, static_cast<std::uint16_t>(e.name.size()));
		put16(out, 0);         // extra length
		out.insert(out.end(), e.name.begin(), e.name.end());
		out.insert(out.end(), e.data.begin(), e.data.end());
		records.push_back(std::move(r));
	}

	const std::uint32_t cd_offset = static_cast<std::uint32_t>(out.size());
	for (const auto &r : records) {
		put32(out, kCentralDirSig);
		put16(out, 20);  // version made by
		put16(out, 20);  // version needed
		put16(out, 0);   // flags
		put16(out, 0);   // method
		put16(out, kDosTime);
		put16(out, kDosDate);
		put32(out, r.crc);
		put32(out, r.size);
		put32(out, r.size);
		put16(out, static_cast<std::uint16_t>(r.name.size()));
		put16(out, 0);  // extra
		put16(out, 0);  // comment
		put16(out, 0);  // disk number
		put16(out, 0);  // internal attrs
		put32(out, 0);  // external attrs
		put32(out, r.offset);
		out.insert(out.end(), r.name.begin(), r.name.end());
	}
	const std::uint32_t cd_size = static_cast<std::uint32_t>(out.size()) - cd_offset;

	put32(out, kEndOfCentralDirSig);
	put16(out, 0);
	put16(out, 0);
	put16(out, static_cast<std::uint16_t>(records.size()));
	put16(out, static_cast<std::uint16_t>(records.size()));
	put32(out, cd_size);
	put32(out, cd_offset);
	put16(out, 0);  // comment length

	std::ofstream f(path, std::ios::binary | std::ios::trunc);
	if (!f) {
		throw std::runtime_error("zip: cannot open " + path.string() + " for writing");
	}
	f.write(reinterpret_cast<const char *>(out.data()), static_cast<std::streamsize>(out.size()));
	if (!f) {
		throw std::runtime_error("zip: write failed for " + path.string());
	}
}

std::vector<ZipEntry> read_zip(const std::filesystem::path &path)
{
	std::ifstream f(path, std::ios::binary);
	if (!f) {
		throw std::runtime_error("zip: cannot open " + path.string());
	}
	std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
	                              std::istreambuf_iterator<char>());
	if (buf.size() < 22) {
		throw std::runtime_error("zip: " + path.string() + " is too small to be an archive");
	}

	// Locate end-of-central-directory; scan backwards past any comment.
	std::size_t eocd = std::string::npos;
	const std::size_t scan_limit = buf.size() >= 22 + 0xffff ? buf.size() - 22 - 0xffff : 0;
	for (std::size_t i = buf.size() - 22 + 1; i-- > scan_limit;) {
		if (get32(&buf[i]) == kEndOfCentralDirSig) {
			eocd = i;
			break;
		}
	}
	if (eocd == std::string::npos) {
		throw std::runtime_error("zip: " + path.string() + " has no end-of-central-directory");
	}
	const std::uint16_t n_entries = get16(&buf[eocd + 10]);
	const std::uint32_t cd_offset = get32(&buf[eocd + 16]);

	std::vector<ZipEntry> entries;
	std::size_t p = cd_offset;
	for (std::uint16_t i = 0; i < n_entries; i++) {
		if (p + 46 > buf.size() || get32(&buf[p]) != kCentralDirSig) {
			throw std::runtime_error("zip: corrupt central directory in " + path.string());
		}
		const std::uint16_t method = get16(&buf[p + 10]);
		const std::uint32_t comp_size = get32(&buf[p + 20]);
		const std::uint32_t uncomp_size = get32(&buf[p + 24]);
		const std::uint16_t name_len = get16(&buf[p + 28]);
		const std::uint16_t extra_len = get16(&buf[p + 30]);
		const std::uint16_t comment_len = get16(&buf[p + 32]);
		const std::uint32_t local_offset = get32(&buf[p + 42]);
		std::string name(reinterpret_cast<const char *>(&buf[p + 46]), name_len);
		p += 46 + name_len + extra_len + comment_len;

		// Local header repeats the name/extra with possibly different extra length.
		if (local_offset + 30 > buf.size() || get32(&buf[local_offset]) != kLocalHeaderSig) {
			throw std::runtime_error("zip: corrupt local header for entry " + name);
		}
		const std::uint16_t lh_name_len = get16(&buf[local_offset + 26]);
		const std::uint16_t lh_extra_len = get16(&buf[local_offset + 28]);
		const std::size_t data_offset = local_offset + 30 + lh_name_len + lh_extra_len;
		if (data_offset + comp_size > buf.size()) {
			throw std::runtime_error("zip: truncated data for entry " + name);
		}

		ZipEntry entry;
		entry.name = std::move(name);
		if (method == 0) {
			if (comp_size != uncomp_size) {
				throw std::runtime_error("zip: stored entry " + entry.name + " has size mismatch");
			}
			entry.data.assign(buf.begin() + static_cast<std::ptrdiff_t>(data_offset),
			                  buf.begin() + static_cast<std::ptrdiff_t>(data_offset + comp_size));
		}
		else if (method == 8) {
			entry.data = inflate_raw(&buf[data_offset], comp_size, uncomp_size, entry.name);
		}
		else {
			throw std::runtime_error("zip: entry " + entry.name + " uses unsupported method " +
			                         std::to_string(method));
		}
		entries.push_back(std::move(entry));
	}
	return entries;
}

std::vector<std::uint8_t> encode_npy(const Tensor &tensor)
{
	std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (";
	for (std::size_t i = 0; i < tensor.shape.size(); i++) {
		if (i) {
			dict += ", ";
		}
		dict += std::to_string(tensor.shape[i]);
	}
	if (tensor.shape.size() == 1) {
		dict += ",";
	}
	dict += "), }";
	// Pad with spaces, terminating '\n', so magic+version+len+dict is a
	// multiple of 64 bytes.
	const std::size_t preamble = 10;
	std::size_t total = preamble + dict.size() + 1;
	const std::size_t padded = (total + 63) / 64 * 64;
	dict.append(padded - total, ' ');
	dict += '\n';

	std::vector<std::uint8_t> out;
	out.reserve(padded + tensor.numel() * 8);
	const char magic[] = "\x93NUMPY";
	out.insert(out.end(), magic, magic + 6);
	out.push_back(1);  // major
	out.push_back(0);  // minor
	put16(out, static_cast<std::uint16_t>(dict.size()));
	out.insert(out.end(), dict.begin(), dict.end());

	// Raw little-endian doubles; this build is little-endian (checked below).
	static_assert(std::endian::native == std::endian::little,
	              "NPY writer assumes a little-endian host");
	const auto *raw = reinterpret_cast<const std::uint8_t *>(tensor.data.data());
	out.insert(out.end(), raw, raw + tensor.numel() * 8);
	return out;
}

namespace {

// Pulls the value substring for a key out of the NPY header dict.
std::string header_value(const std::string &header, const std::string &key,
                         const std::string &entry_name)
{
	const std::string quoted = "'" + key + "'";
	std::size_t pos = header.find(quoted);
	if (pos == std::string::npos) {
		throw std::runtime_error("npy: entry " + entry_name + " header lacks key " + key);
	}
	pos = header.find(':', pos);
	if (pos == std::string::npos) {
		throw std::runtime_error("npy: entry " + entry_name + " has malformed header");
	}
	pos++;
	while (pos < header.size() && header[pos] == ' ') {
		pos++;
	}
	std::size_t end = pos;
	if (header[pos] == '\'') {
		end = header.find('\'', pos + 1);
		if (end == std::string::npos) {
			throw std::runtime_error("npy: entry " + entry_name + " has malformed header");
		}
		return header.substr(pos + 1, end - pos - 1);
	}
	if (header[pos] == '(') {
		end = header.find(')', pos);
		if (end == std::string::npos) {
			throw std::runtime_error("npy: entry " + entry_name + " has malformed header");
		}
		return header.substr(pos, end - pos + 1);
	}
	while (end < header.size() && header[end] != ',' && header[end] != '}') {
		end++;
	}
	return header.substr(pos, end - pos);
}

}  // namespace

Tensor decode_npy(const std::vector<std::uint8_t> &bytes, const std::string &entry_name)
{
	if (bytes.size() < 10 || std::memcmp(bytes.data(), "\x93NUMPY", 6) != 0) {
		throw std::runtime_error("npy: entry " + entry_name + " has bad magic");
	}
	const std::uint8_t major = bytes[6];
	std::size_t header_len = 0;
	std::size_t header_start = 0;
	if (major == 1) {
		header_len = get16(&bytes[8]);
		header_start = 10;
	}
	else if (major == 2) {
		if (bytes.size() < 12) {
			throw std::runtime_error("npy: entry " + entry_name + " is truncated");
		}
		header_len = get32(&bytes[8]);
		header_start = 12;
	}
	else {
		throw std::runtime_error("npy: entry " + entry_name + " has unsupported version " +
		                         std::to_string(major));
	}
	if (header_start + header_len > bytes.size()) {
		throw std::runtime_error("npy: entry " + entry_name + " has truncated header");
	}
	const std::string header(reinterpret_cast<const char *>(&bytes[header_start]), header_len);

	const std::string descr = header_value(header, "descr", entry_name);
	if (descr != "<f8" && descr != "<f4") {
		throw std::runtime_error("npy: entry " + entry_name + " has unsupported dtype '" +
		                         descr + "' (expected <f8 or <f4)");
	}
	const std::string order = header_value(header, "fortran_order", entry_name);
	if (order != "False") {
		throw std::runtime_error("npy: entry " + entry_name + " is Fortran-ordered");
	}
	const std::string shape_s = header_value(header, "shape", entry_name);

	std::vector<std::size_t> shape;
	std::size_t i = 1;  // skip '('
	while (i < shape_s.size() && shape_s[i] != ')') {
		while (i < shape_s.size() && (shape_s[i] == ' ' || shape_s[i] == ',')) {
			i++;
		}
		if (i >= shape_s.size() || shape_s[i] == ')') {
			break;
		}
		std::size_t v = 0;
		bool any = false;
		while (i < shape_s.size() && shape_s[i] >= '0' && shape_s[i] <= '9') {
			v = v * 10 + static_cast<std::size_t>(shape_s[i] - '0');
			i++;
			any = true;
		}
		if (!any) {
			throw std::runtime_error("npy: entry " + entry_name + " has malformed shape " +
			                         shape_s);
		}
		shape.push_back(v);
	}

	const std::size_t count = shape_numel(shape);
	const std::size_t word = descr == "<f8" ? 8 : 4;
	const std::size_t data_start = header_start + header_len;
	if (data_start + count * word > bytes.size()) {
		throw std::runtime_error("npy: entry " + entry_name + " has truncated data (expected " +
		                         std::to_string(count * word) + " bytes)");
	}

	Tensor t;
	t.shape = std::move(shape);
	t.data.resize(count);
	if (word == 8) {
		std::memcpy(t.data.data(), &bytes[data_start], count * 8);
	}
	else {
		for (std::size_t j = 0; j < count; j++) {
			float v;
			std::memcpy(&v, &bytes[data_start + j * 4], 4);
			t.data[j] = static_cast<double>(v);
		}
	}
	return t;
}

namespace {

void validate_record_name(const std::string &name)
{
	if (name.empty()) {
		throw std::invalid_argument("npz: record names must be non-empty");
	}
	for (char c : name) {
		if (c == '/' || static_cast<unsigned char>(c) > 0x7f) {
			throw std::invalid_argument("npz: record name '" + name +
			                            "' must be ASCII without '/'");
		}
	}
}

}  // namespace

void write_npz(const std::map<std::string, Tensor> &records, const std::filesystem::path &path)
{
	std::vector<ZipEntry> entries;
	for (const auto &[name, tensor] : records) {
		validate_record_name(name);
		entries.push_back({name + ".npy", encode_npy(tensor)});
	}
	write_zip(path, entries);
}

std::map<std::string, Tensor> read_npz(const std::filesystem::path &path)
{
	std::map<std::string, Tensor> records;
	for (const auto &entry : read_zip(path)) {
		std::string name = entry.name;
		if (name.size() > 4 && name.substr(name.size() - 4) == ".npy") {
			name = name.substr(0, name.size() - 4);
		}
		records[name] = decode_npy(entry.data, entry.name);
	}
	return records;
}

}  // namespace spikeforge
