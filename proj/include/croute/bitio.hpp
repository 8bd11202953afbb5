#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace croute {

// Bit-packed writer/reader. All table and header sizes in the project are
// accounted in bits of this encoding, so the two classes below define the
// binary format authoritatively.
class BitWriter {
public:
    void put(uint64_t value, int width) {
        if (width < 0 || width > 64) throw std::invalid_argument("bit width out of range");
        if (width < 64 && value >> width) throw std::invalid_argument("value does not fit in width");
        for (int i = 0; i < width; ++i) put_bit((value >> i) & 1u);
    }

    void put_bit(bool b) {
        size_t byte = nbits_ / 8, off = nbits_ % 8;
        if (byte >= bytes_.size()) bytes_.push_back(0);
        if (b) bytes_[byte] |= static_cast<uint8_t>(1u << off);
        ++nbits_;
    }

    size_t bit_size() const { return nbits_; }
    const std::vector<uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<uint8_t> bytes_;
    size_t nbits_ = 0;
};

class BitReader {
public:
    BitReader(const uint8_t* data, size_t nbits) : data_(data), nbits_(nbits) {}
    explicit BitReader(const std::vector<uint8_t>& v) : data_(v.data()), nbits_(v.size() * 8) {}

    uint64_t get(int width) {
        uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            if (get_bit()) v |= (uint64_t{1} << i);
        return v;
    }

    bool get_bit() {
        if (pos_ >= nbits_) throw std::out_of_range("bit stream exhausted");
        bool b = (data_[pos_ / 8] >> (pos_ % 8)) & 1u;
        ++pos_;
        return b;
    }

    size_t position() const { return pos_; }
    void seek(size_t pos) { pos_ = pos; }

private:
    const uint8_t* data_;
    size_t nbits_;
    size_t pos_ = 0;
};

// Width in bits needed to store values 0..max_value.
inline int bit_width_for(uint64_t max_value) {
    int w = 1;
    while (w < 64 && (max_value >> w) != 0) ++w;
    return w;
}

}  // namespace croute
