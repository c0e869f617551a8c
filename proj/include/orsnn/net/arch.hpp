#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace orsnn {

/// One element of an architecture string such as
///   c64k3s1p1-BN-LIF-{c64k3s1p1-BN-LIF}*4-(OR-SEW Block(c128))-AP-FC10
///
/// Grammar (items joined by '-'):
///   cXkYsZ[pW]            convolution, X out channels, kernel Y, stride Z, padding W
///   MPkYsZ[pW]            max pooling
///   AdaptiveAP(N)         adaptive average pooling to N x N
///   AP                    global average pooling
///   FCn                   fully connected, n outputs
///   BN | LIF | MA | IA
///   (<label> Block(cX[sZ]))  residual block, X channels, stride Z (default 2);
///                         the label ("OR-SEW", "SEW", ...) is informational
///   {items}*n             repeat
struct ArchToken {
    enum class Kind { Conv, BN, LIF, MaxPool, AdaptiveAP, AP, FC, Block, Repeat, MA, IA };

    Kind kind = Kind::BN;
    std::size_t channels = 0;  // Conv, Block; FC output features
    std::size_t kernel = 0;
    std::size_t stride = 0;
    std::size_t padding = 0;
    std::size_t size = 0;   // AdaptiveAP output side
    std::size_t count = 0;  // Repeat
    std::vector<ArchToken> body;

    static ArchToken conv(std::size_t channels, std::size_t kernel, std::size_t stride, std::size_t padding);
    static ArchToken max_pool(std::size_t kernel, std::size_t stride, std::size_t padding);
    static ArchToken adaptive_ap(std::size_t size);
    static ArchToken fc(std::size_t features);
    static ArchToken block(std::size_t channels, std::size_t stride = 2);
    static ArchToken repeat(std::size_t count, std::vector<ArchToken> body);
    static ArchToken simple(Kind kind);

    std::string render() const;
    bool operator==(const ArchToken&) const = default;
};

/// Parses and expands repeats, so "{c64k3s1p1-BN-LIF}*4" yields 12 tokens.
/// Errors carry the byte offset of the failure.
std::vector<ArchToken> parse_arch(const std::string& text);

/// Parses keeping Repeat tokens.
std::vector<ArchToken> parse_arch_tree(const std::string& text);

std::vector<ArchToken> expand_repeats(const std::vector<ArchToken>& tokens);

std::string render_arch(const std::vector<ArchToken>& tokens);

/// Reference architectures: mnist, fashion-mnist, dvs-gesture, cifar10-dvs.
std::string preset_arch(const std::string& dataset);

}  // namespace orsnn
