// Offline chat-completions endpoint for trying the LLM engine without a key.
// Every agent keeps its stance. Prints the endpoint URL, then serves until
// stdin closes.
#include <iostream>
#include <string>

#include "stub_server.hpp"

int main() {
  echosim::testing::StubServer server;
  std::cout << server.endpoint() << std::endl;
  std::string line;
  while (std::getline(std::cin, line)) {
  }
  return 0;
}
