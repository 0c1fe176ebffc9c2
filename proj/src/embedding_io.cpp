#include "glassynth/io.hpp"

#include "glassynth/errors.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace glassynth {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'M', 'B', '1'};

template <class T>
void put_le(std::ofstream& out, T value)
{
    std::array<unsigned char, sizeof(T)> bytes{};
    for (std::size_t k = 0; k < sizeof(T); ++k)
        bytes[k] = static_cast<unsigned char>((value >> (8 * k)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(const unsigned char* p)
{
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k)
        v |= static_cast<T>(p[k]) << (8 * k);
    return v;
}

} // namespace

Eigen::VectorXd EmbeddingMatrix::row(std::size_t k) const
{
    if (k >= count())
        throw std::out_of_range("embedding row out of range");
    Eigen::VectorXd v(dimension);
    for (int c = 0; c < dimension; ++c)
        v[c] = rows[k * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(c)];
    return v;
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path)
{
    if (matrix.dimension <= 0 || matrix.rows.size() % static_cast<std::size_t>(matrix.dimension) != 0)
        throw DataError("embedding matrix has inconsistent shape");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dimension));
    put_le<std::uint64_t>(out, matrix.count());
    for (float f : matrix.rows)
        put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open embeddings '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string src = path.string();
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
        throw DataError(src + ": not an EMB1 embedding file");
    const auto dim = get_le<std::uint32_t>(bytes.data() + 4);
    const auto count = get_le<std::uint64_t>(bytes.data() + 8);
    if (dim == 0 || dim > (1u << 20))
        throw DataError(src + ": invalid embedding dimension " + std::to_string(dim));
    const std::uint64_t expected = 16 + count * dim * 4;
    if (count > (bytes.size() / 4) || bytes.size() != expected)
        throw DataError(src + ": size does not match " + std::to_string(count) + " x " + std::to_string(dim));
    EmbeddingMatrix m;
    m.dimension = static_cast<int>(dim);
    m.rows.resize(static_cast<std::size_t>(count) * dim);
    for (std::size_t k = 0; k < m.rows.size(); ++k)
        m.rows[k] = std::bit_cast<float>(get_le<std::uint32_t>(bytes.data() + 16 + 4 * k));
    return m;
}

std::unordered_map<std::string, Eigen::VectorXd> embedding_lookup(const EmbeddingMatrix& matrix,
                                                                  const Manifest& manifest)
{
    if (matrix.count() != manifest.size())
        throw InconsistentManifest("embedding file has " + std::to_string(matrix.count()) + " rows but the manifest has " +
                                   std::to_string(manifest.size()) + " records");
    std::unordered_map<std::string, Eigen::VectorXd> out;
    for (std::size_t k = 0; k < manifest.size(); ++k)
        out.emplace(manifest.records[k].path, matrix.row(k));
    return out;
}

} // namespace glassynth
