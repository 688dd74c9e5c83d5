#include "csl/lexer.hpp"

#include <cctype>
#include <map>

namespace csl {

const char* token_kind_name(TokenKind k) {
    switch (k) {
    case TokenKind::EndOfFile: return "end of file";
    case TokenKind::Newline: return "end of line";
    case TokenKind::Indent: return "indent";
    case TokenKind::Dedent: return "dedent";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::IntLiteral: return "integer literal";
    case TokenKind::KwType: return "'type'";
    case TokenKind::KwIs: return "'is'";
    case TokenKind::KwWhere: return "'where'";
    case TokenKind::KwConst: return "'const'";
    case TokenKind::KwProperty: return "'property'";
    case TokenKind::KwFunction: return "'function'";
    case TokenKind::KwRequires: return "'requires'";
    case TokenKind::KwEnsures: return "'ensures'";
    case TokenKind::KwReturn: return "'return'";
    case TokenKind::KwIf: return "'if'";
    case TokenKind::KwElse: return "'else'";
    case TokenKind::KwTrue: return "'true'";
    case TokenKind::KwFalse: return "'false'";
    case TokenKind::KwPublic: return "'public'";
    case TokenKind::KwPrivate: return "'private'";
    case TokenKind::KwLoop: return "loop keyword";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::LBrace: return "'{'";
    case TokenKind::RBrace: return "'}'";
    case TokenKind::Comma: return "','";
    case TokenKind::Colon: return "':'";
    case TokenKind::Dot: return "'.'";
    case TokenKind::Arrow: return "'->'";
    case TokenKind::FatArrow: return "'=>'";
    case TokenKind::Implies: return "'==>'";
    case TokenKind::EqEq: return "'=='";
    case TokenKind::NotEq: return "'!='";
    case TokenKind::Le: return "'<='";
    case TokenKind::Ge: return "'>='";
    case TokenKind::Lt: return "'<'";
    case TokenKind::Gt: return "'>'";
    case TokenKind::AndAnd: return "'&&'";
    case TokenKind::OrOr: return "'||'";
    case TokenKind::Not: return "'!'";
    case TokenKind::Plus: return "'+'";
    case TokenKind::Minus: return "'-'";
    case TokenKind::Star: return "'*'";
    case TokenKind::Slash: return "'/'";
    case TokenKind::Percent: return "'%'";
    case TokenKind::StarStar: return "'**'";
    case TokenKind::Assign: return "'='";
    }
    return "?";
}

namespace {

const std::map<std::string_view, TokenKind> kKeywords = {
    {"type", TokenKind::KwType},         {"is", TokenKind::KwIs},
    {"where", TokenKind::KwWhere},       {"const", TokenKind::KwConst},
    {"property", TokenKind::KwProperty}, {"function", TokenKind::KwFunction},
    {"requires", TokenKind::KwRequires}, {"ensures", TokenKind::KwEnsures},
    {"return", TokenKind::KwReturn},     {"if", TokenKind::KwIf},
    {"else", TokenKind::KwElse},         {"true", TokenKind::KwTrue},
    {"false", TokenKind::KwFalse},       {"public", TokenKind::KwPublic},
    {"private", TokenKind::KwPrivate},   {"while", TokenKind::KwLoop},
    {"for", TokenKind::KwLoop},          {"do", TokenKind::KwLoop},
};

struct Line {
    int number = 0; // 1-based
    int indent = 0;
    std::string_view text; // without newline
};

bool continues_logical_line(TokenKind k) {
    switch (k) {
    case TokenKind::Assign:
    case TokenKind::Comma:
    case TokenKind::Plus:
    case TokenKind::Minus:
    case TokenKind::Star:
    case TokenKind::Slash:
    case TokenKind::Percent:
    case TokenKind::StarStar:
    case TokenKind::AndAnd:
    case TokenKind::OrOr:
    case TokenKind::Implies:
    case TokenKind::EqEq:
    case TokenKind::NotEq:
    case TokenKind::Lt:
    case TokenKind::Le:
    case TokenKind::Gt:
    case TokenKind::Ge:
    case TokenKind::Arrow:
    case TokenKind::FatArrow:
        return true;
    default:
        return false;
    }
}

class Lexer {
public:
    Lexer(std::string_view source, std::string file)
        : source_(source), file_(std::move(file)) {}

    LexResult run() {
        split_lines();
        indent_stack_.push_back(0);
        size_t i = 0;
        while (i < lines_.size()) {
            const Line& line = lines_[i];
            if (is_blank(line)) {
                ++i;
                continue;
            }
            handle_indent(line);
            size_t tokens_before = result_.tokens.size();
            bool more = scan_line(line);
            ++i;
            // Continuation: unbalanced brackets or a trailing operator pull in
            // the following physical lines.
            while (i < lines_.size() && (bracket_depth_ > 0 || more)) {
                if (is_blank(lines_[i])) {
                    ++i;
                    continue;
                }
                more = scan_line(lines_[i]);
                ++i;
            }
            bracket_depth_ = 0;
            if (result_.tokens.size() > tokens_before)
                emit_simple(TokenKind::Newline, last_span());
        }
        while (indent_stack_.size() > 1) {
            indent_stack_.pop_back();
            emit_simple(TokenKind::Dedent, eof_span());
        }
        emit_simple(TokenKind::EndOfFile, eof_span());
        return std::move(result_);
    }

private:
    void split_lines() {
        int number = 1;
        size_t start = 0;
        for (size_t i = 0; i <= source_.size(); ++i) {
            if (i == source_.size() || source_[i] == '\n') {
                std::string_view text = source_.substr(start, i - start);
                if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
                if (i < source_.size() || !text.empty())
                    lines_.push_back({number, 0, text});
                ++number;
                start = i + 1;
            }
        }
    }

    static bool is_blank_text(std::string_view text) {
        for (size_t i = 0; i < text.size(); ++i) {
            char c = text[i];
            if (c == ' ' || c == '\t') continue;
            if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') return true;
            return false;
        }
        return true;
    }

    bool is_blank(const Line& line) { return is_blank_text(line.text); }

    void handle_indent(const Line& line) {
        int indent = 0;
        for (size_t i = 0; i < line.text.size(); ++i) {
            // Tabs count one column here; scan_line reports them as errors.
            if (line.text[i] == ' ' || line.text[i] == '\t')
                ++indent;
            else
                break;
        }
        if (indent > indent_stack_.back()) {
            indent_stack_.push_back(indent);
            emit_simple(TokenKind::Indent, span_at(line, 0, indent));
        } else {
            while (indent < indent_stack_.back()) {
                indent_stack_.pop_back();
                emit_simple(TokenKind::Dedent, span_at(line, 0, indent > 0 ? indent : 1));
            }
            if (indent != indent_stack_.back())
                error("bad indentation: does not match any enclosing block",
                      span_at(line, 0, indent > 0 ? indent : 1));
        }
    }

    /// Scans one physical line; returns true when the logical line continues.
    bool scan_line(const Line& line) {
        std::string_view text = line.text;
        size_t i = 0;
        while (i < text.size() && text[i] == ' ') ++i;
        TokenKind last = TokenKind::Newline;
        bool any = false;
        while (i < text.size()) {
            char c = text[i];
            if (c == ' ') {
                ++i;
                continue;
            }
            if (c == '\t') {
                error("tab character (spaces only)", span_at(line, (int)i, 1));
                ++i;
                continue;
            }
            if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') break;
            size_t start = i;
            Token tok = scan_token(line, text, i);
            if (tok.kind == TokenKind::EndOfFile) {
                // scan_token reported the error; skip the bad character.
                i = start + 1;
                continue;
            }
            if (tok.kind == TokenKind::LParen || tok.kind == TokenKind::LBrace)
                ++bracket_depth_;
            if (tok.kind == TokenKind::RParen || tok.kind == TokenKind::RBrace)
                bracket_depth_ = bracket_depth_ > 0 ? bracket_depth_ - 1 : 0;
            last = tok.kind;
            any = true;
            result_.tokens.push_back(std::move(tok));
        }
        return any && continues_logical_line(last);
    }

    Token scan_token(const Line& line, std::string_view text, size_t& i) {
        size_t start = i;
        char c = text[i];
        if (std::isalpha((unsigned char)c) || c == '_') {
            while (i < text.size() &&
                   (std::isalnum((unsigned char)text[i]) || text[i] == '_'))
                ++i;
            std::string_view word = text.substr(start, i - start);
            Token t;
            t.text = std::string(word);
            t.span = span_at(line, (int)start, (int)(i - start));
            auto it = kKeywords.find(word);
            t.kind = it != kKeywords.end() ? it->second : TokenKind::Identifier;
            return t;
        }
        if (std::isdigit((unsigned char)c)) {
            while (i < text.size() && std::isdigit((unsigned char)text[i])) ++i;
            Token t;
            t.kind = TokenKind::IntLiteral;
            t.text = std::string(text.substr(start, i - start));
            t.int_value = BigInt(t.text, 10);
            t.span = span_at(line, (int)start, (int)(i - start));
            return t;
        }

        auto two = text.substr(i, 2);
        auto three = text.substr(i, 3);
        TokenKind kind;
        size_t len = 1;
        if (three == "==>") {
            kind = TokenKind::Implies;
            len = 3;
        } else if (two == "==") {
            kind = TokenKind::EqEq;
            len = 2;
        } else if (two == "!=") {
            kind = TokenKind::NotEq;
            len = 2;
        } else if (two == "<=") {
            kind = TokenKind::Le;
            len = 2;
        } else if (two == ">=") {
            kind = TokenKind::Ge;
            len = 2;
        } else if (two == "&&") {
            kind = TokenKind::AndAnd;
            len = 2;
        } else if (two == "||") {
            kind = TokenKind::OrOr;
            len = 2;
        } else if (two == "->") {
            kind = TokenKind::Arrow;
            len = 2;
        } else if (two == "=>") {
            kind = TokenKind::FatArrow;
            len = 2;
        } else if (two == "**") {
            kind = TokenKind::StarStar;
            len = 2;
        } else {
            switch (c) {
            case '(': kind = TokenKind::LParen; break;
            case ')': kind = TokenKind::RParen; break;
            case '{': kind = TokenKind::LBrace; break;
            case '}': kind = TokenKind::RBrace; break;
            case ',': kind = TokenKind::Comma; break;
            case ':': kind = TokenKind::Colon; break;
            case '.': kind = TokenKind::Dot; break;
            case '+': kind = TokenKind::Plus; break;
            case '-': kind = TokenKind::Minus; break;
            case '*': kind = TokenKind::Star; break;
            case '/': kind = TokenKind::Slash; break;
            case '%': kind = TokenKind::Percent; break;
            case '<': kind = TokenKind::Lt; break;
            case '>': kind = TokenKind::Gt; break;
            case '!': kind = TokenKind::Not; break;
            case '=': kind = TokenKind::Assign; break;
            default:
                error(std::string("unexpected character '") + c + "'",
                      span_at(line, (int)i, 1));
                return Token{}; // EndOfFile sentinel: caller skips
            }
        }
        i += len;
        Token t;
        t.kind = kind;
        t.text = std::string(text.substr(start, len));
        t.span = span_at(line, (int)start, (int)len);
        return t;
    }

    SourceSpan span_at(const Line& line, int col0, int len) {
        SourceSpan s;
        s.file = file_;
        s.start_line = s.end_line = line.number;
        s.start_col = col0 + 1;
        s.end_col = col0 + (len > 0 ? len : 1);
        return s;
    }

    SourceSpan last_span() {
        if (!result_.tokens.empty()) return result_.tokens.back().span;
        return eof_span();
    }

    SourceSpan eof_span() {
        SourceSpan s;
        s.file = file_;
        int last = lines_.empty() ? 1 : lines_.back().number;
        s.start_line = s.end_line = last;
        s.start_col = s.end_col = 1;
        return s;
    }

    void emit_simple(TokenKind kind, SourceSpan span) {
        Token t;
        t.kind = kind;
        t.span = std::move(span);
        result_.tokens.push_back(std::move(t));
    }

    void error(std::string msg, SourceSpan span) {
        result_.diagnostics.push_back({Severity::Error, std::move(msg), std::move(span)});
    }

    std::string_view source_;
    std::string file_;
    std::vector<Line> lines_;
    std::vector<int> indent_stack_;
    int bracket_depth_ = 0;
    LexResult result_;
};

} // namespace

LexResult lex(std::string_view source, std::string file) {
    return Lexer(source, std::move(file)).run();
}

} // namespace csl
