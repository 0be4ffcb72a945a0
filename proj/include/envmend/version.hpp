// envmend/version.hpp - package version ordering and requires-python specifiers
//
// Implements the ordering rules registry metadata relies on: numeric release
// segments, pre-releases (a/b/rc) sorting before their final release, .post
// after, .dev before everything at the same release. Strings that do not
// parse are kept as opaque "legacy" versions and sort before all valid ones.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace envmend {

class Version {
public:
    Version() = default;

    static Version parse(std::string_view text) {
        Version v;
        v.raw_ = std::string(text);
        std::string s = normalized(text);
        size_t pos = 0;

        auto digits = [&](uint64_t& out) -> bool {
            if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) return false;
            uint64_t n = 0;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                n = n * 10 + static_cast<uint64_t>(s[pos] - '0');
                ++pos;
            }
            out = n;
            return true;
        };
        auto skip_sep = [&] {
            if (pos < s.size() && (s[pos] == '.' || s[pos] == '_' || s[pos] == '-')) ++pos;
        };
        auto word = [&](std::initializer_list<const char*> names) -> const char* {
            for (const char* w : names) {
                std::string_view sv(w);
                if (s.compare(pos, sv.size(), sv) == 0) return w;
            }
            return nullptr;
        };

        // epoch
        size_t bang = s.find('!');
        if (bang != std::string::npos && bang > 0 &&
            std::all_of(s.begin(), s.begin() + static_cast<long>(bang),
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            v.epoch_ = std::stoull(s.substr(0, bang));
            pos = bang + 1;
        }

        // release segments
        uint64_t seg = 0;
        if (!digits(seg)) return v;  // stays legacy
        v.release_.push_back(seg);
        while (pos < s.size() && s[pos] == '.') {
            size_t save = pos;
            ++pos;
            if (!digits(seg)) {
                pos = save;
                break;
            }
            v.release_.push_back(seg);
        }

        // pre-release
        {
            size_t save = pos;
            skip_sep();
            if (const char* w = word({"alpha", "a", "beta", "b", "preview", "pre", "rc", "c"})) {
                std::string tag(w);
                pos += tag.size();
                skip_sep();
                uint64_t n = 0;
                digits(n);
                int rank = (tag == "a" || tag == "alpha") ? 0 : (tag == "b" || tag == "beta") ? 1 : 2;
                // "dev" also starts after seps; guard against eating "d" of ".dev" (not in word list, fine)
                v.pre_ = {rank, n};
            } else {
                pos = save;
            }
        }

        // post-release
        {
            size_t save = pos;
            if (pos < s.size() && s[pos] == '-' && pos + 1 < s.size() &&
                std::isdigit(static_cast<unsigned char>(s[pos + 1]))) {
                ++pos;
                uint64_t n = 0;
                digits(n);
                v.post_ = n;
            } else {
                skip_sep();
                if (const char* w = word({"post", "rev", "r"})) {
                    pos += std::string_view(w).size();
                    skip_sep();
                    uint64_t n = 0;
                    digits(n);
                    v.post_ = n;
                } else {
                    pos = save;
                }
            }
        }

        // dev-release
        {
            size_t save = pos;
            skip_sep();
            if (word({"dev"})) {
                pos += 3;
                skip_sep();
                uint64_t n = 0;
                digits(n);
                v.dev_ = n;
            } else {
                pos = save;
            }
        }

        // local segment, ignored for ordering
        if (pos < s.size() && s[pos] == '+') pos = s.size();

        v.valid_ = (pos == s.size());
        if (!v.valid_) {
            v.release_.clear();
            v.pre_.reset();
            v.post_.reset();
            v.dev_.reset();
            v.epoch_ = 0;
        }
        return v;
    }

    bool valid() const { return valid_; }
    const std::string& str() const { return raw_; }
    const std::vector<uint64_t>& release() const { return release_; }
    bool is_prerelease() const { return pre_.has_value() || dev_.has_value(); }

    friend bool operator==(const Version& a, const Version& b) { return a.cmp(b) == 0; }
    friend bool operator!=(const Version& a, const Version& b) { return a.cmp(b) != 0; }
    friend bool operator<(const Version& a, const Version& b) { return a.cmp(b) < 0; }
    friend bool operator<=(const Version& a, const Version& b) { return a.cmp(b) <= 0; }
    friend bool operator>(const Version& a, const Version& b) { return a.cmp(b) > 0; }
    friend bool operator>=(const Version& a, const Version& b) { return a.cmp(b) >= 0; }

    // True when this version's release starts with `prefix`'s release
    // segments (the `==N.M.*` wildcard rule).
    bool release_starts_with(const Version& prefix) const {
        if (!valid_ || !prefix.valid_) return false;
        if (prefix.release_.size() > release_.size()) {
            // 3.6 matches 3.6.* via zero padding
            for (size_t i = 0; i < prefix.release_.size(); ++i) {
                uint64_t mine = i < release_.size() ? release_[i] : 0;
                if (mine != prefix.release_[i]) return false;
            }
            return true;
        }
        for (size_t i = 0; i < prefix.release_.size(); ++i)
            if (release_[i] != prefix.release_[i]) return false;
        return true;
    }

private:
    static std::string normalized(std::string_view text) {
        std::string s;
        s.reserve(text.size());
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        if (!s.empty() && s[0] == 'v') s.erase(s.begin());
        return s;
    }

    int cmp(const Version& o) const {
        if (valid_ != o.valid_) return valid_ ? 1 : -1;  // legacy sorts first
        if (!valid_) return raw_.compare(o.raw_) < 0 ? -1 : (raw_ == o.raw_ ? 0 : 1);
        if (epoch_ != o.epoch_) return epoch_ < o.epoch_ ? -1 : 1;
        size_t n = std::max(release_.size(), o.release_.size());
        for (size_t i = 0; i < n; ++i) {
            uint64_t a = i < release_.size() ? release_[i] : 0;
            uint64_t b = i < o.release_.size() ? o.release_[i] : 0;
            if (a != b) return a < b ? -1 : 1;
        }
        auto key = [](const Version& v) {
            // bucket: dev-only < pre < final/post
            int pre_bucket = 1, pre_rank = 0;
            uint64_t pre_num = 0;
            if (v.pre_) {
                pre_bucket = 0;
                pre_rank = v.pre_->first;
                pre_num = v.pre_->second;
            } else if (v.dev_ && !v.post_) {
                pre_bucket = -1;
            }
            int post_present = v.post_ ? 1 : 0;
            uint64_t post_num = v.post_.value_or(0);
            int dev_absent = v.dev_ ? 0 : 1;
            uint64_t dev_num = v.dev_.value_or(0);
            return std::make_tuple(pre_bucket, pre_rank, pre_num, post_present, post_num,
                                   dev_absent, dev_num);
        };
        auto ka = key(*this), kb = key(o);
        if (ka < kb) return -1;
        if (kb < ka) return 1;
        return 0;
    }

    std::string raw_;
    bool valid_ = false;
    uint64_t epoch_ = 0;
    std::vector<uint64_t> release_;
    std::optional<std::pair<int, uint64_t>> pre_;  // (rank a<b<rc, number)
    std::optional<uint64_t> post_;
    std::optional<uint64_t> dev_;
};

// One clause of a version specifier, e.g. ">=3.6" or "!=3.0.*".
struct SpecifierClause {
    std::string op;
    std::string operand;
    bool wildcard = false;  // operand ended in ".*"
};

// Comma-conjunction of clauses with the operators >=, <=, ==, !=, ~=, <, >.
class Specifier {
public:
    static Specifier parse(std::string_view text) {
        Specifier spec;
        size_t start = 0;
        while (start <= text.size()) {
            size_t comma = text.find(',', start);
            std::string_view part =
                text.substr(start, comma == std::string_view::npos ? text.size() - start : comma - start);
            std::string clause = trim(part);
            if (!clause.empty()) spec.clauses_.push_back(parse_clause(clause));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return spec;
    }

    bool empty() const { return clauses_.empty(); }

    bool matches(const Version& v) const {
        for (const auto& c : clauses_)
            if (!clause_matches(c, v)) return false;
        return true;
    }

private:
    static std::string trim(std::string_view sv) {
        size_t b = 0, e = sv.size();
        while (b < e && std::isspace(static_cast<unsigned char>(sv[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(sv[e - 1]))) --e;
        return std::string(sv.substr(b, e - b));
    }

    static SpecifierClause parse_clause(const std::string& text) {
        SpecifierClause c;
        static const char* ops[] = {"===", "==", "!=", ">=", "<=", "~=", ">", "<"};
        for (const char* op : ops) {
            std::string_view sv(op);
            if (text.compare(0, sv.size(), sv) == 0) {
                c.op = std::string(sv);
                c.operand = trim(std::string_view(text).substr(sv.size()));
                break;
            }
        }
        if (c.op.empty()) {  // bare version means exact match
            c.op = "==";
            c.operand = text;
        }
        if (c.operand.size() >= 2 && c.operand.compare(c.operand.size() - 2, 2, ".*") == 0) {
            c.wildcard = true;
            c.operand.resize(c.operand.size() - 2);
        }
        return c;
    }

    static bool clause_matches(const SpecifierClause& c, const Version& v) {
        if (c.op == "===") return v.str() == c.operand;
        Version ref = Version::parse(c.operand);
        if (c.wildcard) {
            bool pref = v.release_starts_with(ref);
            if (c.op == "==") return pref;
            if (c.op == "!=") return !pref;
            return false;  // wildcard with other ops is undefined; fail closed
        }
        if (c.op == "==") return v == ref;
        if (c.op == "!=") return v != ref;
        if (c.op == ">=") return v >= ref;
        if (c.op == "<=") return v <= ref;
        if (c.op == ">") return v > ref;
        if (c.op == "<") return v < ref;
        if (c.op == "~=") {
            // >=X.Y.Z plus ==X.Y.* with the last release segment dropped
            if (v < ref) return false;
            std::string shorter;
            const auto& rel = ref.release();
            if (rel.size() < 2) return v >= ref;
            for (size_t i = 0; i + 1 < rel.size(); ++i) {
                if (i) shorter += '.';
                shorter += std::to_string(rel[i]);
            }
            return v.release_starts_with(Version::parse(shorter));
        }
        return false;
    }

    std::vector<SpecifierClause> clauses_;
};

// Does any patch level of a major.minor interpreter series satisfy `spec`?
// Probes the earliest (X.Y.0) and a late (X.Y.99) patch release.
inline bool series_satisfies(const std::string& series, const Specifier& spec) {
    if (spec.empty()) return true;
    Version lo = Version::parse(series + ".0");
    Version hi = Version::parse(series + ".99");
    return spec.matches(lo) || spec.matches(hi);
}

}  // namespace envmend
