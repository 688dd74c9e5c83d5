#include "csl/parser.hpp"

#include "csl/lexer.hpp"

#include <cassert>

namespace csl {

namespace {

class Parser {
public:
    Parser(std::vector<Token> tokens, std::string file)
        : tokens_(std::move(tokens)), file_(std::move(file)) {}

    ParseResult run() {
        ModuleAst module;
        module.file = file_;
        while (!check(TokenKind::EndOfFile)) {
            if (accept(TokenKind::Newline)) continue;
            size_t before = pos_;
            if (auto d = parse_decl()) module.decls.push_back(std::move(*d));
            if (pos_ == before) recover_to_line_end();
        }
        ParseResult out;
        out.diagnostics = std::move(diagnostics_);
        if (!has_errors(out.diagnostics)) out.module = std::move(module);
        return out;
    }

    Diagnostics take_diagnostics() { return std::move(diagnostics_); }

private:
    // ---- token helpers ----
    const Token& peek(int ahead = 0) const {
        size_t i = pos_ + (size_t)ahead;
        if (i >= tokens_.size()) i = tokens_.size() - 1;
        return tokens_[i];
    }
    bool check(TokenKind k, int ahead = 0) const { return peek(ahead).kind == k; }
    const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
    bool accept(TokenKind k) {
        if (check(k)) {
            advance();
            return true;
        }
        return false;
    }
    const Token* expect(TokenKind k, const char* what) {
        if (check(k)) return &advance();
        error(std::string("expected ") + what + ", found " +
              token_kind_name(peek().kind));
        return nullptr;
    }
    void error(std::string msg) { error(std::move(msg), peek().span); }
    void error(std::string msg, SourceSpan span) {
        diagnostics_.push_back({Severity::Error, std::move(msg), std::move(span)});
    }

    void recover_to_line_end() {
        while (!check(TokenKind::EndOfFile) && !accept(TokenKind::Newline)) advance();
    }

    bool reject_loop_keyword() {
        if (check(TokenKind::KwLoop)) {
            error("loops unsupported: '" + peek().text + "' is not part of the language");
            recover_to_line_end();
            return true;
        }
        return false;
    }

    // ---- declarations ----
    std::optional<Decl> parse_decl() {
        // Visibility words are accepted for source compatibility and dropped.
        accept(TokenKind::KwPublic) || accept(TokenKind::KwPrivate);
        if (reject_loop_keyword()) return std::nullopt;
        if (check(TokenKind::KwType)) return parse_type_decl();
        if (check(TokenKind::KwConst)) return parse_const_decl();
        if (check(TokenKind::KwProperty)) return parse_property_decl();
        if (check(TokenKind::KwFunction)) return parse_function_decl();
        error("expected a declaration (type, const, property or function), found " +
              std::string(token_kind_name(peek().kind)));
        recover_to_line_end();
        return std::nullopt;
    }

    std::optional<Decl> parse_type_decl() {
        TypeDecl decl;
        decl.span = peek().span;
        advance(); // type
        if (const Token* name = expect(TokenKind::Identifier, "type name"))
            decl.name = name->text;
        expect(TokenKind::KwIs, "'is'");
        if (accept(TokenKind::LBrace)) {
            decl.is_record = true;
            if (!check(TokenKind::RBrace)) {
                do {
                    TypeDecl::Field field;
                    field.span = peek().span;
                    field.type = parse_type_expr();
                    if (const Token* n = expect(TokenKind::Identifier, "field name"))
                        field.name = n->text;
                    field.span = SourceSpan::join(field.span, tokens_[pos_ - 1].span);
                    decl.fields.push_back(std::move(field));
                } while (accept(TokenKind::Comma));
            }
            expect(TokenKind::RBrace, "'}'");
        } else if (accept(TokenKind::LParen)) {
            decl.base = parse_type_expr();
            if (const Token* b = expect(TokenKind::Identifier, "binder name"))
                decl.binder = b->text;
            expect(TokenKind::RParen, "')'");
        } else {
            error("expected '{' or '(' after 'is'");
            recover_to_line_end();
            return std::nullopt;
        }
        // Inline clauses, then any number of following `where` lines.
        while (check(TokenKind::KwWhere)) {
            advance();
            decl.wheres.push_back(parse_expr());
        }
        expect(TokenKind::Newline, "end of line");
        while (check(TokenKind::KwWhere)) {
            advance();
            decl.wheres.push_back(parse_expr());
            while (check(TokenKind::KwWhere)) {
                advance();
                decl.wheres.push_back(parse_expr());
            }
            expect(TokenKind::Newline, "end of line");
        }
        decl.span = SourceSpan::join(decl.span, tokens_[pos_ - 1].span);
        return Decl{std::move(decl)};
    }

    std::optional<Decl> parse_const_decl() {
        ConstDecl decl;
        decl.span = peek().span;
        advance(); // const
        if (const Token* name = expect(TokenKind::Identifier, "constant name"))
            decl.name = name->text;
        expect(TokenKind::Assign, "'='");
        allow_pow_ = true;
        decl.init = parse_expr();
        allow_pow_ = false;
        decl.span = SourceSpan::join(decl.span, decl.init.span);
        expect(TokenKind::Newline, "end of line");
        return Decl{std::move(decl)};
    }

    std::optional<Decl> parse_property_decl() {
        PropertyDecl decl;
        decl.span = peek().span;
        advance(); // property
        if (const Token* name = expect(TokenKind::Identifier, "property name"))
            decl.name = name->text;
        expect(TokenKind::LParen, "'('");
        decl.params = parse_param_list();
        expect(TokenKind::RParen, "')'");
        expect(TokenKind::FatArrow, "'=>'");
        decl.body = parse_expr();
        decl.span = SourceSpan::join(decl.span, decl.body.span);
        expect(TokenKind::Newline, "end of line");
        return Decl{std::move(decl)};
    }

    std::vector<Param> parse_param_list() {
        std::vector<Param> params;
        if (check(TokenKind::RParen)) return params;
        do {
            Param p;
            p.span = peek().span;
            p.type = parse_type_expr();
            if (const Token* n = expect(TokenKind::Identifier, "parameter name"))
                p.name = n->text;
            p.span = SourceSpan::join(p.span, tokens_[pos_ - 1].span);
            params.push_back(std::move(p));
        } while (accept(TokenKind::Comma));
        return params;
    }

    std::optional<Decl> parse_function_decl() {
        FunctionDecl decl;
        decl.span = peek().span;
        advance(); // function
        if (const Token* name = expect(TokenKind::Identifier, "function name"))
            decl.name = name->text;
        expect(TokenKind::LParen, "'('");
        decl.params = parse_param_list();
        expect(TokenKind::RParen, "')'");
        if (accept(TokenKind::Arrow)) {
            expect(TokenKind::LParen, "'('");
            decl.returns = parse_param_list();
            expect(TokenKind::RParen, "')'");
        }

        bool body_follows = false;
        if (accept(TokenKind::Colon)) {
            body_follows = true;
        }
        expect(TokenKind::Newline, "end of line");
        while (!body_follows &&
               (check(TokenKind::KwRequires) || check(TokenKind::KwEnsures))) {
            bool is_requires = advance().kind == TokenKind::KwRequires;
            Expr clause = parse_expr();
            (is_requires ? decl.requires_clauses : decl.ensures_clauses)
                .push_back(std::move(clause));
            if (accept(TokenKind::Colon)) body_follows = true;
            expect(TokenKind::Newline, "end of line");
        }
        if (!body_follows) {
            error("expected ':' to introduce the function body", tokens_[pos_ - 1].span);
            return std::nullopt;
        }
        decl.body = parse_block();
        decl.span = SourceSpan::join(decl.span, tokens_[pos_ - 1].span);
        return Decl{std::move(decl)};
    }

    // ---- statements ----
    std::vector<Stmt> parse_block() {
        std::vector<Stmt> stmts;
        if (!expect(TokenKind::Indent, "an indented block")) return stmts;
        while (!check(TokenKind::Dedent) && !check(TokenKind::EndOfFile)) {
            if (accept(TokenKind::Newline)) continue;
            size_t before = pos_;
            if (auto s = parse_stmt()) stmts.push_back(std::move(*s));
            if (pos_ == before) recover_to_line_end();
        }
        accept(TokenKind::Dedent);
        return stmts;
    }

    std::optional<Stmt> parse_stmt() {
        if (reject_loop_keyword()) return std::nullopt;
        if (check(TokenKind::KwReturn)) return parse_return();
        if (check(TokenKind::KwIf)) return parse_if();
        if (check(TokenKind::KwElse)) {
            error("'else' without a matching 'if'");
            recover_to_line_end();
            return std::nullopt;
        }
        if (check(TokenKind::LParen)) return parse_tuple_stmt();
        if (check(TokenKind::Identifier)) {
            if (check(TokenKind::Identifier, 1)) return parse_var_decl_single();
            return parse_assign_single();
        }
        error("expected a statement, found " + std::string(token_kind_name(peek().kind)));
        recover_to_line_end();
        return std::nullopt;
    }

    std::optional<Stmt> parse_return() {
        Stmt stmt;
        stmt.span = peek().span;
        advance(); // return
        ReturnStmt ret;
        if (!check(TokenKind::Newline)) {
            do {
                ret.values.push_back(parse_expr());
            } while (accept(TokenKind::Comma));
        }
        if (!ret.values.empty())
            stmt.span = SourceSpan::join(stmt.span, ret.values.back().span);
        stmt.node = std::move(ret);
        expect(TokenKind::Newline, "end of line");
        return stmt;
    }

    std::optional<Stmt> parse_if() {
        Stmt stmt;
        stmt.span = peek().span;
        advance(); // if
        IfStmt node;
        node.cond = parse_expr();
        expect(TokenKind::Colon, "':'");
        expect(TokenKind::Newline, "end of line");
        node.then_body = parse_block();
        if (check(TokenKind::KwElse)) {
            advance();
            expect(TokenKind::Colon, "':'");
            expect(TokenKind::Newline, "end of line");
            node.else_body = parse_block();
        }
        stmt.span = SourceSpan::join(stmt.span, tokens_[pos_ - 1].span);
        stmt.node = std::move(node);
        return stmt;
    }

    /// `(T a, T b) = f(..)` or `(lv, lv, ..) = rhs`, decided by the second
    /// token inside the parentheses.
    std::optional<Stmt> parse_tuple_stmt() {
        Stmt stmt;
        stmt.span = peek().span;
        advance(); // (
        bool is_decl = check(TokenKind::Identifier) && check(TokenKind::Identifier, 1);
        if (is_decl) {
            VarDeclStmt node;
            do {
                VarDeclStmt::Binding b;
                b.span = peek().span;
                b.type = parse_type_expr();
                if (const Token* n = expect(TokenKind::Identifier, "variable name"))
                    b.name = n->text;
                b.span = SourceSpan::join(b.span, tokens_[pos_ - 1].span);
                node.vars.push_back(std::move(b));
            } while (accept(TokenKind::Comma));
            expect(TokenKind::RParen, "')'");
            expect(TokenKind::Assign, "'='");
            node.init = parse_expr();
            stmt.span = SourceSpan::join(stmt.span, node.init.span);
            stmt.node = std::move(node);
        } else {
            AssignStmt node;
            do {
                node.targets.push_back(parse_lvalue());
            } while (accept(TokenKind::Comma));
            expect(TokenKind::RParen, "')'");
            expect(TokenKind::Assign, "'='");
            node.value = parse_expr();
            stmt.span = SourceSpan::join(stmt.span, node.value.span);
            stmt.node = std::move(node);
        }
        expect(TokenKind::Newline, "end of line");
        return stmt;
    }

    std::optional<Stmt> parse_var_decl_single() {
        Stmt stmt;
        stmt.span = peek().span;
        VarDeclStmt node;
        VarDeclStmt::Binding b;
        b.span = peek().span;
        b.type = parse_type_expr();
        if (const Token* n = expect(TokenKind::Identifier, "variable name"))
            b.name = n->text;
        b.span = SourceSpan::join(b.span, tokens_[pos_ - 1].span);
        node.vars.push_back(std::move(b));
        expect(TokenKind::Assign, "'='");
        node.init = parse_expr();
        stmt.span = SourceSpan::join(stmt.span, node.init.span);
        stmt.node = std::move(node);
        expect(TokenKind::Newline, "end of line");
        return stmt;
    }

    std::optional<Stmt> parse_assign_single() {
        Stmt stmt;
        stmt.span = peek().span;
        AssignStmt node;
        node.targets.push_back(parse_lvalue());
        expect(TokenKind::Assign, "'='");
        node.value = parse_expr();
        stmt.span = SourceSpan::join(stmt.span, node.value.span);
        stmt.node = std::move(node);
        expect(TokenKind::Newline, "end of line");
        return stmt;
    }

    LValue parse_lvalue() {
        LValue lv;
        lv.span = peek().span;
        if (const Token* n = expect(TokenKind::Identifier, "variable name"))
            lv.path.push_back(n->text);
        while (accept(TokenKind::Dot)) {
            if (const Token* n = expect(TokenKind::Identifier, "field name"))
                lv.path.push_back(n->text);
        }
        lv.span = SourceSpan::join(lv.span, tokens_[pos_ - 1].span);
        return lv;
    }

    TypeExpr parse_type_expr() {
        TypeExpr t;
        t.span = peek().span;
        if (const Token* n = expect(TokenKind::Identifier, "type name")) t.name = n->text;
        return t;
    }

    // ---- expressions ----
    Expr parse_expr() { return parse_implies(); }

    Expr parse_implies() {
        Expr lhs = parse_or();
        if (accept(TokenKind::Implies)) {
            Expr rhs = parse_implies(); // right-associative
            return make_binary(BinaryOp::Implies, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (accept(TokenKind::OrOr))
            lhs = make_binary(BinaryOp::Or, std::move(lhs), parse_and());
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_cmp();
        while (accept(TokenKind::AndAnd))
            lhs = make_binary(BinaryOp::And, std::move(lhs), parse_cmp());
        return lhs;
    }

    Expr parse_cmp() {
        Expr lhs = parse_add();
        for (;;) {
            BinaryOp op;
            if (check(TokenKind::EqEq)) op = BinaryOp::Eq;
            else if (check(TokenKind::NotEq)) op = BinaryOp::Ne;
            else if (check(TokenKind::Le)) op = BinaryOp::Le;
            else if (check(TokenKind::Ge)) op = BinaryOp::Ge;
            else if (check(TokenKind::Lt)) op = BinaryOp::Lt;
            else if (check(TokenKind::Gt)) op = BinaryOp::Gt;
            else break;
            advance();
            lhs = make_binary(op, std::move(lhs), parse_add());
        }
        return lhs;
    }

    Expr parse_add() {
        Expr lhs = parse_mul();
        for (;;) {
            BinaryOp op;
            if (check(TokenKind::Plus)) op = BinaryOp::Add;
            else if (check(TokenKind::Minus)) op = BinaryOp::Sub;
            else break;
            advance();
            lhs = make_binary(op, std::move(lhs), parse_mul());
        }
        return lhs;
    }

    Expr parse_mul() {
        Expr lhs = parse_pow();
        for (;;) {
            BinaryOp op;
            if (check(TokenKind::Star)) op = BinaryOp::Mul;
            else if (check(TokenKind::Slash)) op = BinaryOp::Div;
            else if (check(TokenKind::Percent)) op = BinaryOp::Mod;
            else break;
            advance();
            lhs = make_binary(op, std::move(lhs), parse_pow());
        }
        return lhs;
    }

    Expr parse_pow() {
        Expr lhs = parse_unary();
        if (check(TokenKind::StarStar)) {
            if (!allow_pow_)
                error("operator '**' is only allowed in constant declarations");
            advance();
            return make_binary(BinaryOp::Pow, std::move(lhs), parse_pow());
        }
        return lhs;
    }

    Expr parse_unary() {
        if (check(TokenKind::Minus)) {
            SourceSpan span = advance().span;
            Expr e = make_unary(UnaryOp::Neg, parse_unary());
            e.span = SourceSpan::join(span, e.span);
            return e;
        }
        if (check(TokenKind::Not)) {
            SourceSpan span = advance().span;
            Expr e = make_unary(UnaryOp::Not, parse_unary());
            e.span = SourceSpan::join(span, e.span);
            return e;
        }
        return parse_postfix();
    }

    Expr parse_postfix() {
        Expr e = parse_atom();
        while (accept(TokenKind::Dot)) {
            const Token* n = expect(TokenKind::Identifier, "field name");
            Expr fa = make_field(std::move(e), n ? n->text : "?");
            fa.span = SourceSpan::join(fa.as<FieldAccess>().base->span,
                                       n ? n->span : peek().span);
            e = std::move(fa);
        }
        return e;
    }

    Expr parse_atom() {
        const Token& tok = peek();
        if (check(TokenKind::IntLiteral)) {
            Expr e = make_int(tok.int_value);
            e.span = tok.span;
            advance();
            return e;
        }
        if (check(TokenKind::KwTrue) || check(TokenKind::KwFalse)) {
            Expr e = make_bool(tok.kind == TokenKind::KwTrue);
            e.span = tok.span;
            advance();
            return e;
        }
        if (check(TokenKind::Identifier)) {
            std::string name = tok.text;
            SourceSpan span = tok.span;
            advance();
            if (accept(TokenKind::LParen)) {
                CallExpr call{std::move(name), {}};
                if (!check(TokenKind::RParen)) {
                    do {
                        call.args.push_back(
                            std::make_unique<Expr>(parse_expr()));
                    } while (accept(TokenKind::Comma));
                }
                const Token* close = expect(TokenKind::RParen, "')'");
                Expr e;
                e.node = std::move(call);
                e.span = SourceSpan::join(span, close ? close->span : span);
                return e;
            }
            Expr e = make_var(std::move(name));
            e.span = span;
            return e;
        }
        if (check(TokenKind::LParen)) {
            SourceSpan span = advance().span;
            Expr first = parse_expr();
            if (accept(TokenKind::Comma)) {
                TupleExpr tuple;
                tuple.elems.push_back(std::make_unique<Expr>(std::move(first)));
                do {
                    tuple.elems.push_back(std::make_unique<Expr>(parse_expr()));
                } while (accept(TokenKind::Comma));
                const Token* close = expect(TokenKind::RParen, "')'");
                Expr e;
                e.node = std::move(tuple);
                e.span = SourceSpan::join(span, close ? close->span : span);
                return e;
            }
            expect(TokenKind::RParen, "')'");
            return first;
        }
        if (check(TokenKind::LBrace)) {
            SourceSpan span = advance().span;
            RecordLit lit;
            if (!check(TokenKind::RBrace)) {
                do {
                    RecordLit::Field f;
                    if (const Token* n = expect(TokenKind::Identifier, "field name"))
                        f.name = n->text;
                    expect(TokenKind::Colon, "':'");
                    f.value = std::make_unique<Expr>(parse_expr());
                    lit.fields.push_back(std::move(f));
                } while (accept(TokenKind::Comma));
            }
            const Token* close = expect(TokenKind::RBrace, "'}'");
            Expr e;
            e.node = std::move(lit);
            e.span = SourceSpan::join(span, close ? close->span : span);
            return e;
        }
        if (check(TokenKind::KwLoop)) {
            error("loops unsupported: '" + tok.text + "' is not part of the language");
        } else {
            error("expected an expression, found " +
                  std::string(token_kind_name(tok.kind)));
        }
        if (!check(TokenKind::Newline) && !check(TokenKind::EndOfFile)) advance();
        Expr e = make_int(0);
        e.span = tok.span;
        return e;
    }

    std::vector<Token> tokens_;
    std::string file_;
    size_t pos_ = 0;
    bool allow_pow_ = false;
    Diagnostics diagnostics_;
};

} // namespace

ParseResult parse(std::string_view source, std::string file) {
    LexResult lexed = lex(source, file);
    Parser parser(std::move(lexed.tokens), file);
    ParseResult result = parser.run();
    result.diagnostics.insert(result.diagnostics.begin(),
                              lexed.diagnostics.begin(), lexed.diagnostics.end());
    if (has_errors(result.diagnostics)) result.module.reset();
    return result;
}

} // namespace csl
