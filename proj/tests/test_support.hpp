// Shared test fixture: the casino contract model, plus parse/check helpers.
#pragma once

#include "doctest.h"

#include "csl/parser.hpp"
#include "csl/resolve.hpp"

#include <string>
#include <utility>

namespace csl::test {

inline const char* kCasino = R"(const IDLE = 0
const GAME_AVAILABLE = 1
const BET_PLACED = 2
const MAX_U256 = 2**256 - 1

type uint256 is (int b)
where b >= 0
where b <= MAX_U256

type State is (int s) where s >= IDLE && s <= BET_PLACED

type Coin is (int c) where c >= 0 && c <= 1

type Address is {
    int address,
    uint256 balance
}

type Wager is {
    uint256 value,
    Coin guess
}

type Message is {
    Address sender,
    uint256 value
}

type Block is {
    Address coinbase
}

type Transaction is {
    Address origin
}

type Casino is {
    Address address,           State state,
    Address operator,         uint256 pot,
    uint256 timeout,          uint256 secretNumber,
    Address player,           Wager wager,
    Message msg,             Block block,
    Transaction tx,          bool destroyed
}
where state == BET_PLACED ==> pot + wager.value == address.balance
where state != BET_PLACED ==> pot == address.balance
where operator.address != address.address
where player.address != address.address
where msg.sender.address != address.address
where block.coinbase.address != address.address
where tx.origin.address != address.address

property inState(Casino c, int s) => c.state == s

function transfer(Address to, Address from, uint256 amount) -> (Address newTo, Address newFrom)
requires amount <= from.balance
requires to.balance + amount < MAX_U256
ensures newTo.balance == to.balance + amount
ensures newFrom.balance == from.balance - amount
ensures newTo.address == to.address
ensures newFrom.address == from.address:
    return {address: to.address, balance: to.balance + amount}, {address: from.address, balance: from.balance - amount}

function playerWins(Casino casino) -> (Casino out)
requires inState(casino, BET_PLACED)
requires casino.wager.value * 2 <= casino.address.balance
requires casino.wager.value * 2 + casino.player.balance < MAX_U256
ensures out.pot == casino.pot - casino.wager.value
ensures out.player.balance == casino.player.balance + casino.wager.value * 2
ensures out.wager.value == 0
ensures out.address.balance == casino.address.balance - casino.wager.value * 2:
    (Address a1, Address a2) = transfer(casino.player, casino.address, casino.wager.value * 2)
    (casino.player, casino.address, casino.pot, casino.wager.value) =
        (a1, a2, casino.pot - casino.wager.value, 0)
    return casino
)";

// 2^256 - 1, the uint256 ceiling.
inline const char* kMaxU256 =
    "115792089237316195423570985008687907853269984665640564039457584007913129639935";

inline ModuleAst parse_ok(const std::string& src) {
    ParseResult r = parse(src, "test.csl");
    for (const Diagnostic& d : r.diagnostics) {
        CAPTURE(d.to_string());
        CHECK(d.severity != Severity::Error);
    }
    REQUIRE(r.module.has_value());
    return std::move(*r.module);
}

inline ResolvedModule check_ok(const std::string& src) {
    ResolveResult r = typecheck(parse_ok(src));
    for (const Diagnostic& d : r.diagnostics) {
        CAPTURE(d.to_string());
        CHECK(d.severity != Severity::Error);
    }
    REQUIRE(r.module.has_value());
    return std::move(*r.module);
}

} // namespace csl::test
