#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace scanpower
{

enum class stuck_at : std::uint8_t
{
  sa0,
  sa1
};

constexpr bool stuck_value( stuck_at s ) noexcept { return s == stuck_at::sa1; }

/// A fault location: a cell pin, or a primary input when `cell` is empty
/// (then `port` names the input).
struct fault_site
{
  std::string cell;
  std::string port;

  bool is_primary_input() const noexcept { return cell.empty(); }

  auto operator<=>( fault_site const& ) const = default;
};

struct fault
{
  fault_site site;
  stuck_at polarity = stuck_at::sa0;

  auto operator<=>( fault const& ) const = default;

  std::string to_string() const
  {
    std::string where = site.is_primary_input() ? site.port : site.cell + "/" + site.port;
    return where + ( polarity == stuck_at::sa0 ? " SA0" : " SA1" );
  }
};

} // namespace scanpower
