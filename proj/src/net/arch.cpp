#include "orsnn/net/arch.hpp"

#include <cctype>

#include "orsnn/error.hpp"

namespace orsnn {

ArchToken ArchToken::conv(std::size_t channels, std::size_t kernel, std::size_t stride, std::size_t padding) {
    ArchToken t;
    t.kind = Kind::Conv;
    t.channels = channels;
    t.kernel = kernel;
    t.stride = stride;
    t.padding = padding;
    return t;
}

ArchToken ArchToken::max_pool(std::size_t kernel, std::size_t stride, std::size_t padding) {
    ArchToken t;
    t.kind = Kind::MaxPool;
    t.kernel = kernel;
    t.stride = stride;
    t.padding = padding;
    return t;
}

ArchToken ArchToken::adaptive_ap(std::size_t size) {
    ArchToken t;
    t.kind = Kind::AdaptiveAP;
    t.size = size;
    return t;
}

ArchToken ArchToken::fc(std::size_t features) {
    ArchToken t;
    t.kind = Kind::FC;
    t.channels = features;
    return t;
}

ArchToken ArchToken::block(std::size_t channels, std::size_t stride) {
    ArchToken t;
    t.kind = Kind::Block;
    t.channels = channels;
    t.stride = stride;
    return t;
}

ArchToken ArchToken::repeat(std::size_t count, std::vector<ArchToken> body) {
    ArchToken t;
    t.kind = Kind::Repeat;
    t.count = count;
    t.body = std::move(body);
    return t;
}

ArchToken ArchToken::simple(Kind kind) {
    ArchToken t;
    t.kind = kind;
    return t;
}

std::string ArchToken::render() const {
    auto n = [](std::size_t v) { return std::to_string(v); };
    switch (kind) {
        case Kind::Conv:
            return "c" + n(channels) + "k" + n(kernel) + "s" + n(stride) + (padding ? "p" + n(padding) : "");
        case Kind::MaxPool:
            return "MPk" + n(kernel) + "s" + n(stride) + (padding ? "p" + n(padding) : "");
        case Kind::AdaptiveAP: return "AdaptiveAP(" + n(size) + ")";
        case Kind::AP: return "AP";
        case Kind::FC: return "FC" + n(channels);
        case Kind::BN: return "BN";
        case Kind::LIF: return "LIF";
        case Kind::MA: return "MA";
        case Kind::IA: return "IA";
        case Kind::Block:
            return "(OR-SEW Block(c" + n(channels) + (stride != 2 ? "s" + n(stride) : "") + "))";
        case Kind::Repeat: return "{" + render_arch(body) + "}*" + n(count);
    }
    return "?";
}

namespace {

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    std::vector<ArchToken> parse_all() {
        auto items = parse_sequence();
        if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
        return items;
    }

private:
    [[noreturn]] void error(const std::string& what) const {
        fail(ErrorKind::ParseError, "architecture string, byte " + std::to_string(pos_) + ": " + what);
    }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return eof() ? '\0' : text_[pos_]; }

    bool accept(std::string_view word) {
        if (text_.compare(pos_, word.size(), word) == 0) {
            pos_ += word.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view word) {
        if (!accept(word)) error("expected '" + std::string(word) + "'");
    }

    std::size_t number() {
        if (!std::isdigit(static_cast<unsigned char>(peek()))) error("expected a number");
        std::size_t v = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            v = v * 10 + static_cast<std::size_t>(text_[pos_] - '0');
            ++pos_;
        }
        return v;
    }

    std::size_t positive() {
        const std::size_t at = pos_;
        const std::size_t v = number();
        if (v == 0) {
            pos_ = at;
            error("value must be >= 1");
        }
        return v;
    }

    std::vector<ArchToken> parse_sequence() {
        std::vector<ArchToken> items;
        items.push_back(parse_item());
        while (peek() == '-') {
            ++pos_;
            items.push_back(parse_item());
        }
        return items;
    }

    // k<n>s<n>[p<n>]
    void geometry(ArchToken& t) {
        expect("k");
        t.kernel = positive();
        expect("s");
        t.stride = positive();
        if (accept("p")) t.padding = number();
    }

    ArchToken parse_item() {
        const std::size_t start = pos_;
        if (accept("{")) {
            auto body = parse_sequence();
            expect("}");
            expect("*");
            const std::size_t count = positive();
            return ArchToken::repeat(count, std::move(body));
        }
        if (accept("(")) {
            // Optional label such as "OR-SEW " before "Block(".
            const auto block_at = text_.find("Block(", pos_);
            const auto close_at = text_.find(')', pos_);
            if (block_at == std::string::npos || (close_at != std::string::npos && close_at < block_at)) {
                error("expected '<label> Block(cN)'");
            }
            pos_ = block_at;
            expect("Block(c");
            ArchToken t = ArchToken::block(positive());
            if (accept("s")) t.stride = positive();
            expect(")");
            expect(")");
            return t;
        }
        if (accept("AdaptiveAP(")) {
            ArchToken t = ArchToken::adaptive_ap(positive());
            expect(")");
            return t;
        }
        if (accept("MP")) {
            ArchToken t = ArchToken::simple(ArchToken::Kind::MaxPool);
            geometry(t);
            return t;
        }
        if (accept("AP")) return ArchToken::simple(ArchToken::Kind::AP);
        if (accept("FC")) return ArchToken::fc(positive());
        if (accept("BN")) return ArchToken::simple(ArchToken::Kind::BN);
        if (accept("LIF")) return ArchToken::simple(ArchToken::Kind::LIF);
        if (accept("MA")) return ArchToken::simple(ArchToken::Kind::MA);
        if (accept("IA")) return ArchToken::simple(ArchToken::Kind::IA);
        if (accept("c")) {
            ArchToken t = ArchToken::simple(ArchToken::Kind::Conv);
            t.channels = positive();
            geometry(t);
            return t;
        }
        pos_ = start;
        if (eof()) error("unexpected end of input");
        error("unknown token starting with '" + std::string(1, peek()) + "'");
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<ArchToken> parse_arch_tree(const std::string& text) {
    return Parser(text).parse_all();
}

std::vector<ArchToken> expand_repeats(const std::vector<ArchToken>& tokens) {
    std::vector<ArchToken> out;
    for (const auto& t : tokens) {
        if (t.kind != ArchToken::Kind::Repeat) {
            out.push_back(t);
            continue;
        }
        const auto body = expand_repeats(t.body);
        for (std::size_t i = 0; i < t.count; ++i) out.insert(out.end(), body.begin(), body.end());
    }
    return out;
}

std::vector<ArchToken> parse_arch(const std::string& text) {
    return expand_repeats(parse_arch_tree(text));
}

std::string render_arch(const std::vector<ArchToken>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += '-';
        out += tokens[i].render();
    }
    return out;
}

std::string preset_arch(const std::string& dataset) {
    const std::string tail = "{c64k3s1p1-BN-LIF}*4-(OR-SEW Block(c128))-(OR-SEW Block(c256))-(OR-SEW Block(c512))-AP-";
    if (dataset == "mnist" || dataset == "fashion-mnist") return "c64k3s1p1-BN-LIF-" + tail + "FC10";
    if (dataset == "dvs-gesture") return "c64k7s2p3-BN-LIF-MPk3s2p1-" + tail + "FC11";
    if (dataset == "cifar10-dvs") return "AdaptiveAP(48)-c64k3s2p1-BN-LIF-MPk3s2p1-" + tail + "FC10";
    fail(ErrorKind::InvalidArgument, "no reference architecture for '" + dataset + "'");
}

}  // namespace orsnn
