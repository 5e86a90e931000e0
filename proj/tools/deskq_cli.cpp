#include <iostream>
int main() { std::cout << "deskq cli placeholder\n"; return 0; }
