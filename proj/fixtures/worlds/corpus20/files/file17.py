import os
import sys
import mod17

print(mod17)
