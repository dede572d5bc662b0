#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace scanpower
{

/// Run `fn(i)` for i in [0, n) on up to `jobs` threads. Work items must
/// write only to their own result slots; the first exception is rethrown.
template<class Fn>
void parallel_for( std::size_t n, std::size_t jobs, Fn&& fn )
{
  jobs = std::max<std::size_t>( 1, std::min( jobs, n ) );
  if ( jobs == 1 )
  {
    for ( std::size_t i = 0; i < n; ++i )
      fn( i );
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while ( true )
    {
      auto const i = next.fetch_add( 1 );
      if ( i >= n )
        return;
      try
      {
        fn( i );
      }
      catch ( ... )
      {
        std::lock_guard lock( error_mutex );
        if ( !error )
          error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> threads;
  for ( std::size_t t = 0; t < jobs; ++t )
    threads.emplace_back( worker );
  for ( auto& t : threads )
    t.join();
  if ( error )
    std::rethrow_exception( error );
}

} // namespace scanpower
