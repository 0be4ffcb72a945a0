import os
import sys
import mod09

print(mod09)
