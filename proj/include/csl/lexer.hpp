#pragma once

#include "csl/ast.hpp"
#include "csl/diagnostics.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace csl {

enum class TokenKind {
    EndOfFile,
    Newline, // end of a logical line
    Indent,
    Dedent,

    Identifier,
    IntLiteral,

    KwType, KwIs, KwWhere, KwConst, KwProperty, KwFunction,
    KwRequires, KwEnsures, KwReturn, KwIf, KwElse,
    KwTrue, KwFalse,
    KwPublic, KwPrivate,
    KwLoop, // any reserved loop word (`while`, `for`); always an error downstream

    LParen, RParen, LBrace, RBrace,
    Comma, Colon, Dot,
    Arrow,      // ->
    FatArrow,   // =>
    Implies,    // ==>
    EqEq, NotEq, Le, Ge, Lt, Gt,
    AndAnd, OrOr, Not,
    Plus, Minus, Star, Slash, Percent, StarStar,
    Assign, // =
};

const char* token_kind_name(TokenKind k);

struct Token {
    TokenKind kind = TokenKind::EndOfFile;
    std::string text;
    BigInt int_value;
    SourceSpan span;
};

struct LexResult {
    std::vector<Token> tokens;
    Diagnostics diagnostics;

    bool ok() const { return !has_errors(diagnostics); }
};

/// Tokenizes a whole module. Indentation must be spaces; a logical line
/// continues onto the next physical line while brackets are open or the line
/// ends with an operator, `=` or `,`.
LexResult lex(std::string_view source, std::string file);

} // namespace csl
